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

"""Confidence estimation toolkit: metrics, calibration, simulation and the
ablation pipeline, backed by a C++ core."""

import json

from ._confkit import (
    DataError,
    NumericError,
    UsageError,
    apply_pwlm,
    auc_pr,
    ece,
    edit_distance,
    eer,
    fit_pwlm,
    nce,
    run_cli,
    run_scenario,
)
from . import _confkit


def metrics_report(scores, labels, bins=50):
    """AUC-PR, EER, NCE, ECE and counts; undefined entries are None."""
    return json.loads(_confkit.metrics_report_json(list(scores), list(labels), bins))


def run_experiment(plan_path, out_dir):
    return json.loads(_confkit.run_experiment(str(plan_path), str(out_dir)))


__all__ = [
    "DataError",
    "NumericError",
    "UsageError",
    "apply_pwlm",
    "auc_pr",
    "ece",
    "edit_distance",
    "eer",
    "fit_pwlm",
    "metrics_report",
    "nce",
    "run_cli",
    "run_experiment",
    "run_scenario",
]
