"""Operation-count scaling of the two fourth-moment evaluation strategies.

The dense route evaluates δP_ip = ¼ G²ⁱ:E₄:G²ᵖ by direct contraction:
every (i, p) output entry sums n⁴ products, so the count grows like
m²n⁴ (plus building E₄ itself).  The square-root route instead forms one
column p_r = ½β_r G²:(u_r ⊗ u_r) per CPD factor, R = n(n+1)/2 of them,
for roughly R·m·n² multiplies plus the extra triangularization work the
R columns cause.

With m = n this is ~n⁶ against ~n⁵: the factor route's count must grow
strictly slower.  This script prints both counts for n ∈ {2..12} and the
fitted log-log slopes.  Counts are scalar multiplications of each
strategy as implemented; wall-clock is deliberately not measured.

Run:  python benchmarks/opcount_scaling.py
"""

import numpy as np


def dense_contraction_count(n, m):
    """Multiplies for the direct δP contraction, including building E₄."""
    e4_build = 3 * n ** 4                 # three P⊗P outer products
    contraction = m * m * 2 * n ** 4      # per (i,p): n⁴ terms, 2 mults each
    return e4_build + contraction


def sqrt_columns_count(n, m):
    """Multiplies for the R factor columns plus their triangularization cost."""
    r = n * (n + 1) // 2
    per_column = (
        n * n          # u_r = S_x v_r
        + m * n * n    # T = G² : u_r   (contract the trailing index)
        + m * n        # p  = T : u_r
        + 2 * m        # ½β_r scaling of the column
    )
    qr_extra = r * 6 * m * m   # each appended column: ~m rotations of ~m-rows
    return r * per_column + qr_extra


def fitted_slope(ns, counts):
    return float(np.polyfit(np.log(ns), np.log(counts), 1)[0])


def main():
    ns = np.arange(2, 13)
    dense = np.array([dense_contraction_count(n, n) for n in ns], float)
    sqrt_ = np.array([sqrt_columns_count(n, n) for n in ns], float)

    print(f"{'n':>4}{'dense mults':>16}{'sqrt mults':>16}{'ratio':>10}")
    for n, d, s in zip(ns, dense, sqrt_):
        print(f"{n:>4}{int(d):>16}{int(s):>16}{d / s:>10.2f}")

    sd = fitted_slope(ns, dense)
    ss = fitted_slope(ns, sqrt_)
    print(f"\nfitted log-log slope, dense contraction: {sd:.3f}")
    print(f"fitted log-log slope, factor columns:    {ss:.3f}")
    if ss < sd:
        print("factor-column count grows strictly slower")
    else:
        print("WARNING: expected the factor-column count to grow slower")


if __name__ == "__main__":
    main()
