"""Tour of the estimation models on a small hand-built class.

Six graders each rank a handful of submissions; two also give numeric
grades. The script fits every model family and prints the rankings they
produce, the latent scores where the model has them, and the per-grader
reliabilities of the +g variants.
"""

from opg.data import Dataset, GraderFeedback
from opg.estimators import MODEL_NAMES, fit_model
from opg.rankings import WeakRanking

ordinal_feedback = {
    "alice": [["essay2"], ["essay1"], ["essay4"]],
    "bob": [["essay2"], ["essay4", "essay3"]],
    "carol": [["essay1"], ["essay2"], ["essay3"]],
    "dave": [["essay2"], ["essay1"], ["essay3"]],
}
cardinal_feedback = {
    "erin": {"essay1": 7.5, "essay2": 9.0, "essay4": 4.0},
    "frank": {"essay1": 6.0, "essay3": 5.0, "essay4": 5.0},
}

feedback = [
    GraderFeedback.from_ordinal(g, WeakRanking(tuple(tuple(grp) for grp in groups)))
    for g, groups in ordinal_feedback.items()
]
cardinal_only = tuple(
    GraderFeedback.from_cardinal(g, grades) for g, grades in cardinal_feedback.items()
)
data = Dataset.from_feedback(tuple(feedback) + cardinal_only)
numeric = Dataset.from_feedback(cardinal_only)

print(f"dataset: {len(data.items)} submissions, {len(data.graders)} graders")
print(f"models available: {', '.join(MODEL_NAMES)}\n")


def show(name, data=data):
    est = fit_model(name, data)
    order = " > ".join("{" + ", ".join(group) + "}" for group in est.ranking.groups)
    print(f"{name:8s} {order}")
    if est.scores is not None:
        scores = ", ".join(f"{d}={est.scores[d]:+.2f}" for d in sorted(est.scores))
        print(f"{'':8s} scores: {scores}")
    if est.reliabilities is not None:
        rel = ", ".join(f"{g}={est.reliabilities[g]:.2f}" for g in sorted(est.reliabilities))
        print(f"{'':8s} reliabilities: {rel}")


print("-- ordinal rank aggregation --")
for name in ("mal", "malbc", "mal+k"):
    show(name)

print("\n-- ordinal models with latent scores --")
for name in ("bt", "thur", "pl", "mals"):
    show(name)

print("\n-- cardinal models, on the two graders who gave numbers --")
for name in ("scavg", "ncs", "ncs+g"):
    show(name, numeric)

print("\n-- reliability-weighted variants --")
for name in ("mal+g", "bt+g"):
    show(name)

print(
    "\nNote how the graders who agree with the consensus (essay2 on top)"
    "\nearn reliabilities above the others."
)
