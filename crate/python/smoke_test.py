#!/usr/bin/env python3
"""Smoke test for the stockcast_py extension module.

Build the workspace first, then run this script from anywhere:

    cargo build --workspace
    python3 python/smoke_test.py

The script copies the built cdylib into a temp directory under the
importable name stockcast_py.so, imports it, and exercises every
binding: tokenizer, scorer, scaler, metrics, model inference, and
checkpoint loading (via a tiny training run of the CLI binary).
"""

import math
import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

checks = 0


def ok(cond, label):
    global checks
    if not cond:
        sys.exit(f"FAIL: {label}")
    checks += 1
    print(f"ok {label}")


def raises(exc, fn, label):
    global checks
    try:
        fn()
    except exc:
        checks += 1
        print(f"ok {label}")
        return
    except Exception as e:  # noqa: BLE001 - report the wrong class
        sys.exit(f"FAIL: {label} raised {type(e).__name__}: {e}")
    sys.exit(f"FAIL: {label} did not raise")


def find_artifacts():
    for profile in ("release", "debug"):
        lib = os.path.join(ROOT, "target", profile, "libstockcast_py.so")
        cli = os.path.join(ROOT, "target", profile, "stockcast")
        if os.path.exists(lib) and os.path.exists(cli):
            return lib, cli
    sys.exit(
        "build artifacts not found; run `cargo build --workspace` first "
        "(needs both libstockcast_py.so and the stockcast binary)"
    )


lib, cli = find_artifacts()
tmp = tempfile.mkdtemp(prefix="stockcast-py-")
shutil.copy(lib, os.path.join(tmp, "stockcast_py.so"))
sys.path.insert(0, tmp)

import stockcast_py as sp  # noqa: E402

# softmax
p = sp.softmax([1.0, 2.0, 3.0])
exps = [math.exp(x) for x in (1.0, 2.0, 3.0)]
want = [e / sum(exps) for e in exps]
ok(len(p) == 3 and all(abs(a - b) < 1e-12 for a, b in zip(p, want)), "softmax matches closed form")
ok(abs(sum(p) - 1.0) < 1e-12 and p[0] < p[1] < p[2], "softmax sums to 1 and is monotone")
raises(ValueError, lambda: sp.softmax([]), "softmax on empty input raises ValueError")

# tokenizer
ok(sp.tokenize("Stocks Surge, Rally!") == ["stocks", "surge", "rally"], "tokenize lowercases and strips punctuation")
ok(sp.tokenize("") == [], "tokenize of empty headline is empty")
ok(len(sp.tokenize("word " * 50, 32)) == 32, "tokenize truncates to max_len")

# scorer (starter lexicon)
scorer = sp.Scorer()
neu, pos, neg = scorer.score("profit surge strong gains")
ok(abs(neu + pos + neg - 1.0) < 1e-12, "scorer distribution sums to 1")
ok(pos > neu and pos > neg, "positive headline scores positive")
neu2, pos2, neg2 = scorer.score("qqqq zzzz")
ok(abs(neu2 - 1 / 3) < 1e-12 and abs(pos2 - 1 / 3) < 1e-12, "unknown words score uniform")
raises((ValueError, IOError), lambda: sp.Scorer("/nonexistent/lexicon.tsv"), "missing lexicon file raises")

# scaler
sc = sp.Scaler.fit([10.0, 20.0, 30.0])
ok(sc.min == 10.0 and sc.max == 30.0, "scaler fit finds min and max")
ok(sc.normalize(20.0) == 0.5 and sc.denormalize(0.5) == 20.0, "scaler round trips midpoint")
raises(ValueError, lambda: sp.Scaler.fit([5.0, 5.0]), "constant series cannot be fit")

# metrics
ok(sp.mae([1.0, 2.0], [2.0, 4.0]) == 1.5, "mae exact on small case")
ok(abs(sp.mape([110.0], [100.0]) - 0.1) < 1e-15, "mape exact on small case")
ok(sp.accuracy(0.045) == 0.955, "accuracy is 1 - mape")
raises(ValueError, lambda: sp.mape([1.0], [0.0]), "mape with zero actual raises ValueError")
raises(ValueError, lambda: sp.mae([1.0], [1.0, 2.0]), "mae length mismatch raises ValueError")

# models
expected_params = {"fused_lstm": 51451, "price_lstm": 50851, "dnn": 43521}
for arch, count in expected_params.items():
    m = sp.Model(arch)
    ok(m.count_params() == count, f"{arch} has {count} parameters")
    ok(m.arch == arch and m.window == 8, f"{arch} getters round trip")
ok(sp.Model("fused_lstm").feature_dim == 4, "fused model consumes 4 features per step")
ok(sp.Model("price_lstm").feature_dim == 1, "price model consumes 1 feature per step")
raises(ValueError, lambda: sp.Model("nope"), "unknown architecture raises ValueError")

window = [[0.1 * (t + 1)] for t in range(8)]
m1 = sp.Model("price_lstm", 8, 7)
m2 = sp.Model("price_lstm", 8, 7)
preds1 = m1.predict([window, window])
preds2 = m2.predict([window, window])
ok(len(preds1) == 2 and all(math.isfinite(x) for x in preds1), "predict returns one finite value per window")
ok(preds1 == preds2 and preds1[0] == preds1[1], "same seed and input give identical predictions")
m3 = sp.Model("price_lstm", 8, 8)
ok(m3.predict([window]) != [preds1[0]], "different seed gives different predictions")
ragged = [[0.1], [0.2, 0.3]] + [[0.1]] * 6
raises(ValueError, lambda: m1.predict([ragged]), "ragged window raises ValueError")
raises(ValueError, lambda: m1.predict([window[:5]]), "wrong window length raises ValueError")

# checkpoint loading: train a tiny model with the CLI, then load it here
raises(IOError, lambda: sp.load_checkpoint("/nonexistent/model.ckpt"), "missing checkpoint raises IOError")
work = os.path.join(tmp, "work")
os.makedirs(work)
subprocess.run([cli, "synth", "--out", "."], cwd=work, check=True, capture_output=True)
subprocess.run([cli, "train", "--arch", "dnn", "--epochs", "2", "--out", "."], cwd=work, check=True, capture_output=True)
model, scaler, epoch, val_loss = sp.load_checkpoint(os.path.join(work, "dnn.ckpt"))
ok(model.arch == "dnn" and model.count_params() == 43521, "loaded checkpoint rebuilds the dnn")
ok(epoch in (1, 2) and math.isfinite(val_loss) and val_loss >= 0.0, "checkpoint metadata is sane")
ok(scaler.min < scaler.max, "checkpoint carries the fitted scaler")
norm_window = [[scaler.normalize(scaler.min + i)] for i in range(8)]
preds = model.predict([norm_window])
ok(len(preds) == 1 and math.isfinite(preds[0]), "loaded model predicts")

print(f"\nall {checks} checks passed")
