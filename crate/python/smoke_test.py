#!/usr/bin/env python3
"""Smoke test for the qcbench_py extension module.

Builds nothing itself: it expects the extension to be compiled first with

    cargo build -p qcbench-py --release

and loads the resulting shared library from target/. Run as:

    python3 python/smoke_test.py
"""

import importlib.util
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / "release" / "libqcbench_py.so",
        ROOT / "target" / "debug" / "libqcbench_py.so",
    ]
    for lib in candidates:
        if lib.exists():
            spec = importlib.util.spec_from_file_location("qcbench_py", lib)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            return module
    sys.exit(
        "libqcbench_py.so not found; run `cargo build -p qcbench-py --release` first"
    )


def main():
    qc = load_module()

    tax = qc.taxonomy()
    assert len(tax) == 6, f"expected 6 coarse classes, got {len(tax)}"
    assert sum(len(v) for v in tax.values()) == 50, "expected 50 fine classes"

    records = qc.generate_corpus(seed=7, scale=0.1)
    assert len(records) >= 300
    assert {"id", "text", "coarse", "fine"} <= set(records[0])
    again = qc.generate_corpus(seed=7, scale=0.1)
    assert records == again, "corpus generation is not deterministic"

    assert len(qc.stopwords()) > 0

    model = qc.train(records, "nbc", seed=7, overrides={"alpha": 0.2})
    assert model.classifier == "nbc"
    assert len(model.classes) == 6
    label = model.predict(records[0]["text"])
    assert label in model.classes
    batch = model.predict_batch([r["text"] for r in records[:10]])
    assert len(batch) == 10

    with tempfile.TemporaryDirectory() as tmp:
        path = str(Path(tmp) / "model.json")
        model.save(path)
        loaded = qc.Model.load(path)
        assert loaded.predict(records[0]["text"]) == label

    report = qc.crossval(records, "knn", folds=5, seed=7)
    assert report["folds"] == 5
    assert len(report["per_fold"]) == 5
    accuracy = report["pooled"]["accuracy"]
    assert accuracy > 0.5, f"knn crossval accuracy suspiciously low: {accuracy}"

    bench = qc.bench("nbc", "train", "n", [250, 500, 1000], repeats=3, seed=7)
    assert len(bench["result"]["median_times_s"]) == 3
    assert all(t > 0 for t in bench["result"]["median_times_s"])

    try:
        qc.train(records, "nosuch")
    except ValueError:
        pass
    else:
        sys.exit("expected ValueError for unknown classifier")

    print("qcbench_py smoke test: all checks passed")


if __name__ == "__main__":
    main()
