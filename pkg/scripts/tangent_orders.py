"""Measured order and leading coefficient of the standard variation families,
plus the lifted family on the augmented system."""
import numpy as np

from nullctrl import ode_core as oc
from nullctrl import tangent_method as tm


def main():
    J = oc.jakubczyk()
    for kind in ("constant", "jakubczyk-e2", "jakubczyk-e3"):
        est = tm.estimate_order(J, tm.make_variation(kind), substeps=512)
        print(f"{kind:14s} k={est.k_hat} k_fit={est.k_fit:.4f} xi={np.array2string(est.xi_hat, precision=6)}")
    Ji = oc.jakubczyk_int()
    lift = tm.lift_direction(Ji, tm.make_variation("jakubczyk-e3", 1, dim=4),
                             tm.make_variation("jakubczyk-e3", -1, dim=4))
    est = tm.estimate_order(Ji, lift, np.geomspace(0.25, 0.06, 8), substeps=1024)
    print(f"{'lifted e3':14s} k={est.k_hat} k_fit={est.k_fit:.4f} xi={np.array2string(est.xi_hat, precision=6)}"
          f" (expected {tm.E3_COEFF:.6g} e4)")
    print(est.to_csv(), end="")


if __name__ == "__main__":
    main()
