"""Catching graders who do not actually grade.

Lazy graders submit plausible-looking numbers drawn independently of the
work they were assigned. Reliability-aware models push their estimated
reliability toward zero, which both exposes them and shields the final
ranking from their noise.
"""

import dataclasses

from opg.estimators import fit_model
from opg.experiments import (
    lazy_identification,
    lazy_identification_heuristic,
    robustness_delta,
)
from opg.metrics import TargetSet
from opg.synth import CardinalNormalGraders, SynthConfig, simulate

cfg = SynthConfig(
    n_items=40,
    n_graders=150,
    items_per_grader=7,
    grader_model=CardinalNormalGraders(eta=24.0, bias_std=2.0),
    n_lazy=10,
    seed=0,
)
data, truth = simulate(cfg)
print(f"{len(data.graders)} graders, of which {len(data.lazy_graders)} are lazy\n")

est = fit_model("mal+g", data)
flagged = sorted(est.reliabilities, key=lambda g: (est.reliabilities[g], g))[:20]
caught = sorted(set(flagged) & data.lazy_graders)
print("bottom 20 graders by estimated reliability:")
print(" ", ", ".join(flagged))
print(f"lazy graders among them: {len(caught)}/10 ({', '.join(caught)})\n")

rate = lazy_identification(data, "mal+g", reps=50, seed=0)
heur = lazy_identification_heuristic(data, "mal", reps=50, seed=0)
print(f"identification rate over 50 resampled lazy cohorts: {rate:.0%}")
print(f"heuristic baseline (distance from the plain aggregate): {heur:.0%}\n")

base = dataclasses.replace(data, lazy_graders=frozenset())
target = TargetSet((truth.ranking,))
deltas = robustness_delta(base, "mal", [0, 10, 25, 50], target, reps=10, seed=0)
print("ranking damage as more lazy graders pile in (E_K change vs none):")
for count, delta in zip([0, 10, 25, 50], deltas):
    print(f"  +{count:2d} lazy graders: {delta:+.2f} points")
