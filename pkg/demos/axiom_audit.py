"""Audit the coherence axioms and norm bounds on seeded random instances."""

from otrisk import (
    CVaR,
    HigherMoment,
    KusuokaMixture,
    check_axioms,
    check_bounds,
    default_tolerance,
    sample_pairs,
)

FAMILIES = [
    ("shortfall beta=0.9", CVaR(0.9)),
    ("power penalty p=2, c=1.2", HigherMoment(2.0, 1.2)),
    ("mixture of levels", KusuokaMixture(((0.25, 0.5), (0.6, 0.5)))),
]


def main() -> None:
    pairs = sample_pairs(seed=2027, count=500)
    for label, spec in FAMILIES:
        tol = default_tolerance(spec)
        axioms = check_axioms(spec, pairs, tol, seed=1)
        bounds = check_bounds(spec, pairs, tol)
        verdict = "ok" if (axioms.passed and bounds.passed) else "VIOLATED"
        print(f"{label}  (tol {tol:.0e})  -> {verdict}")
        for check in axioms.checks + bounds.checks:
            print(f"    {check.name:<18} worst {check.max_violation:.2e}")
        print()


if __name__ == "__main__":
    main()
