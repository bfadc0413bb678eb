"""How much grading effort does a reliable ranking need?

Two dials control the grading budget: how many of the graders actually
participate, and how many items each one ranks. This script downsamples a
synthetic classroom along both axes and prints the accuracy curves, plus
bootstrap and self-consistency error bars for the full dataset.
"""

from opg.experiments import bootstrap_ek, downsample_curve, self_consistency
from opg.metrics import TargetSet
from opg.synth import MallowsGraders, SynthConfig, simulate

cfg = SynthConfig(
    n_items=40,
    n_graders=120,
    items_per_grader=7,
    grader_model=MallowsGraders(eta=1.0),
    seed=3,
)
data, truth = simulate(cfg)
target = TargetSet((truth.ranking,))

print("fewer participating graders (7 items each):")
curve = downsample_curve(data, "mal", "reviewers", [15, 30, 60, 120], target, reps=10, seed=0)
for point in curve:
    print(f"  {point.level:4d} graders  E_K = {point.ek_mean:5.2f} +- {point.ek_std:.2f}")

print("\nfewer items per grader (all 120 graders):")
curve = downsample_curve(
    data, "mal", "items_per_reviewer", [2, 3, 5, 7], target, reps=10, seed=0
)
for point in curve:
    print(f"  {point.level:4d} items    E_K = {point.ek_mean:5.2f} +- {point.ek_std:.2f}")

mean, std = bootstrap_ek(data, "mal", target, reps=200, seed=0)
print(f"\nbootstrap over graders (200 reps): E_K = {mean:.2f} +- {std:.2f}")

mean, std = self_consistency(data, "mal", partitions=20, seed=0)
print(f"self-consistency of random grader halves: E_K = {mean:.2f} +- {std:.2f}")
print("(50 would mean the two halves are unrelated; small values mean the")
print(" class agrees with itself even without ground truth)")
