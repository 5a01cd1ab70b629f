"""A tour of the tensor-train building blocks.

Builds a 4D separable-plus-noise tensor, compresses it at a few
tolerances, and shows how rank, storage, and reconstruction error trade
off.  Everything here runs in well under a second.
"""
import numpy as np

from ttvlasov import TruncationControl, tt


def main():
    rng = np.random.default_rng(7)
    sizes = (24, 24, 24, 24)

    # a rank-2 signal plus small full-rank noise
    x = np.linspace(0, 2 * np.pi, sizes[0])
    signal = tt.add(
        tt.rank_one([np.cos(x), np.sin(x), np.ones(sizes[2]), np.cos(2 * x)]),
        tt.rank_one([np.sin(x), np.ones(sizes[1]), np.cos(x), np.sin(3 * x)]))
    noise = tt.tt_from_full(1e-6 * rng.standard_normal(sizes),
                            TruncationControl(0.0))
    a = tt.add(signal, noise)
    dense = tt.reconstruct_full(a)
    total = dense.size

    print(f"tensor {sizes}, {total} entries, raw ranks {a.ranks}")
    print(f"{'epsilon':>10} {'ranks':>18} {'stored':>8} {'error':>12}")
    for eps in (1e-2, 1e-4, 1e-6, 1e-9):
        out = tt.round(a, TruncationControl(eps * tt.norm(a)))
        err = np.linalg.norm(tt.reconstruct_full(out) - dense)
        stored = sum(k.size for k in out.kernels)
        print(f"{eps:>10.0e} {str(out.ranks):>18} {stored:>8} {err:>12.3e}")

    # elementwise product with on-the-fly truncation
    b = tt.scale(signal, 0.5)
    prod = tt.hadamard_rounded(a, b, TruncationControl(1e-8))
    exact = dense * tt.reconstruct_full(b)
    print(f"\nhadamard product ranks {prod.ranks}, "
          f"error {np.linalg.norm(tt.reconstruct_full(prod) - exact):.3e}")


if __name__ == "__main__":
    main()
