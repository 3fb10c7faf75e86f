"""Numerical uniqueness checks for each basis family.

For every kind the moment test, the sampled Gram test and a noiseless
coefficient recovery are run on a few random configurations.
"""
from collections import Counter

from pointsource import independence_lab as lab

kinds = ["log", "pole1", "pole2", "mixed12", "log-pole", "mass2", "dipole2", "multipole2-3", "mass3", "dipole3"]
for kind in kinds:
    verdicts = lab.run_verification(kind, n_k=4, trials=5, seed=1)
    tally = Counter(v.verdict for v in verdicts)
    worst = min(v.sigma_min_moment for v in verdicts)
    note = "  (open kind, reported only)" if kind in lab.OPEN_KINDS else ""
    print(f"{kind:14s} {dict(tally)}  worst moment sigma_min {worst:.2e}{note}")
