"""The full command-line workflow in one sitting.

Everything the library does is also reachable through the `opg` command.
This script drives simulate -> estimate -> evaluate -> experiment through
the CLI entry point and shows the files each stage writes.
"""

import json
import tempfile
from pathlib import Path

from opg.cli import main

workdir = Path(tempfile.mkdtemp(prefix="opg-demo-"))
sim = workdir / "class.json"
truth = workdir / "truth.json"
est = workdir / "estimate.json"
report = workdir / "bootstrap.json"

steps = [
    ["simulate", "--items", "20", "--graders", "40", "--items-per-grader", "5",
     "--grader-model", "mallows:1.5", "--seed", "42",
     "--output", str(sim), "--truth-output", str(truth)],
    ["estimate", "--model", "mal+g", "--input", str(sim),
     "--output", str(est), "--seed", "42"],
    ["evaluate", "--input", str(est), "--target", str(truth)],
    ["experiment", "--name", "bootstrap", "--model", "mal", "--input", str(sim),
     "--target", str(truth), "--reps", "100", "--seed", "0", "--output", str(report)],
]
for argv in steps:
    print(f"$ opg {' '.join(argv)}")
    code = main(argv)
    assert code == 0, f"exit code {code}"
    print()

estimate = json.loads(est.read_text())
top = [group[0] for group in estimate["ranking"][:3]]
print(f"top three submissions: {', '.join(top)}")
worst_grader = min(estimate["reliabilities"], key=estimate["reliabilities"].get)
print(f"least reliable grader: {worst_grader}")

boot = json.loads(report.read_text())
print(f"bootstrap E_K: {boot['ek_mean']:.2f} +- {boot['ek_std']:.2f}")
print(f"\nartifacts left in {workdir}")
