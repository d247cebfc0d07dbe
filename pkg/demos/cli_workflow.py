"""The same pipeline driven entirely through the command-line interface.

Writes a dataset file, trains both solvers, scores a held-out file, checks
the AUC of the score file, and reruns training to show the model files are
byte-for-byte reproducible.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

from aucmax import split, to_libsvm
from aucmax.synthetic import make_rings


def run(*args):
    cmd = [sys.executable, "-m", "aucmax.cli", *args]
    print("$ aucmax " + " ".join(args))
    out = subprocess.run(cmd, capture_output=True, text=True)
    sys.stdout.write(out.stdout)
    if out.returncode != 0:
        sys.stderr.write(out.stderr)
        raise SystemExit(out.returncode)
    return out.stdout


work = Path(tempfile.mkdtemp(prefix="aucmax-demo-"))
data = make_rings(n=1200, seed=2, imbalance=3.0, noise=0.3)
train, holdout = split(data, 0.25, seed=2)
(work / "train.libsvm").write_text(to_libsvm(train))
(work / "holdout.libsvm").write_text(to_libsvm(holdout))
(work / "holdout.labels").write_text(
    "\n".join(str(int(v)) for v in holdout.y) + "\n")
print(f"wrote {train.n} training rows and {holdout.n} holdout rows under {work}\n")

# batch solver
run("train-batch", "--data", str(work / "train.libsvm"),
    "--landmarks", "48", "--seed", "0", "--model", str(work / "batch.model"))
print()

# stochastic solver with a per-epoch curve
run("train-sgd", "--data", str(work / "train.libsvm"),
    "--landmarks", "48", "--seed", "0", "--lambda", "5e-6", "--epochs", "30",
    "--curve", str(work / "curve.csv"), "--model", str(work / "sgd.model"))
print("curve head:")
print("\n".join((work / "curve.csv").read_text().splitlines()[:4]) + "\n")

# score the holdout file with the batch model, then evaluate the scores
run("predict", "--model", str(work / "batch.model"),
    "--data", str(work / "holdout.libsvm"), "--scores", str(work / "holdout.scores"))
holdout_auc = run("eval-auc", "--scores", str(work / "holdout.scores"),
                  "--labels", str(work / "holdout.labels"))
print(f"holdout AUC: {holdout_auc.strip()}\n")

# same command, same seed: identical bytes out
run("train-batch", "--data", str(work / "train.libsvm"),
    "--landmarks", "48", "--seed", "0", "--model", str(work / "batch2.model"))
same = (work / "batch.model").read_bytes() == (work / "batch2.model").read_bytes()
print(f"retrained model byte-identical: {same}")
