# Copyright 2026 The confkit Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


import json
import os
import subprocess

import pytest

import confkit

SCENARIO = {
    "seed": 3,
    "vocab_size": 30,
    "topk": 2,
    "extra_dims": 0,
    "n": 2,
    "domains": [
        {"name": "in", "unigram": {"zipf": 1.0}, "error_model": {"p_sub": 0.15, "p_ins": 0.02, "p_del": 0.02}},
        {"name": "ood", "unigram": {"zipf": 1.3}, "error_model": {"p_sub": 0.25, "p_ins": 0.02, "p_del": 0.02}},
    ],
    "corpora": [
        {"name": "train", "domain": "in", "utterances": 40},
        {"name": "test", "domain": "in", "utterances": 30},
        {"name": "unlab", "domain": "ood", "utterances": 20, "reference": "pseudo"},
        {"name": "ood_test", "domain": "ood", "utterances": 30},
    ],
    "texts": [
        {"name": "in_text", "domain": "in", "sentences": 80},
        {"name": "ood_text", "domain": "ood", "sentences": 80},
    ],
}


def test_metrics():
    scores = [0.9, 0.8, 0.2]
    labels = [1, 1, 0]
    assert confkit.auc_pr(scores, labels) == pytest.approx(1.0)
    assert confkit.eer(scores, labels) == pytest.approx(0.0)
    assert confkit.nce(scores, labels) == pytest.approx(0.7111100607212564, abs=1e-12)
    report = confkit.metrics_report([0.7, 0.6], [1, 1])
    assert report["auc"] is None and report["n_pos"] == 2
    with pytest.raises(confkit.DataError):
        confkit.auc_pr([0.5], [1, 0])


def test_alignment_and_calibration():
    assert confkit.edit_distance([1, 2, 3], [1, 3]) == 1
    scores = [i / 999 for i in range(1000)]
    labels = [1 if s > 0.5 else 0 for s in scores]
    bp, values = confkit.fit_pwlm(scores, labels, 3, 20)
    mapped = confkit.apply_pwlm(bp, values, scores)
    assert all(b >= a for a, b in zip(mapped, mapped[1:]))
    assert bp[0] == 0.0 and bp[-1] == 1.0


def test_simulate_and_experiment(tmp_path):
    paths = confkit.run_scenario(json.dumps(SCENARIO), str(tmp_path / "data"))
    assert any(p.endswith("unlab.truth.jsonl") for p in paths)
    model = {"hidden": 3, "layers": 1, "train": {"epochs": 1, "batch_size": 8}}
    plan = {
        "seed": 1,
        "corpora": {
            role: f"data/{name}.jsonl" if not name.endswith("text") else f"data/{name}.txt"
            for role, name in [
                ("train", "train"),
                ("test", "test"),
                ("ood_unlabeled", "unlab"),
                ("ood_test", "ood_test"),
                ("in_text", "in_text"),
                ("ood_text", "ood_text"),
            ]
        },
        "lm_order": 2,
        "cem": model,
        "rebm": model,
        "select_k": 5,
    }
    (tmp_path / "plan.json").write_text(json.dumps(plan))
    grid = confkit.run_experiment(tmp_path / "plan.json", tmp_path / "out")
    assert len(grid["cells"]) == 4
    assert (tmp_path / "out" / "summary.md").exists()
    again = confkit.run_experiment(tmp_path / "plan.json", tmp_path / "out2")
    assert again == grid


def test_cli_in_process_and_binary(tmp_path):
    code, out, _ = confkit.run_cli(["--help"])
    assert code == 0 and "experiment" in out
    assert confkit.run_cli(["--nope"])[0] == 1
    binary = os.environ.get("CONFKIT_CLI")
    if binary:
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        r = subprocess.run([binary, "label", "--corpus", str(bad), "--out", str(tmp_path)], capture_output=True)
        assert r.returncode == 2
