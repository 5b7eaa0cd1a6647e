# Copyright 2026 The vertiformer Authors
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

"""End-to-end smoke of the python surface: every exported verb runs."""

import json
import math
import os

import pytest

import vertiformer as vf

# A deliberately small pipeline so the whole file runs in well under a
# minute: short corpus, narrow model, one epoch.
SMALL = json.dumps(
    {
        "data": {"duration_s": 40.0, "seed": 11},
        "model": {
            "d_model": 16,
            "mlp_dim": 16,
            "heads": 2,
            "enc_layers": 1,
            "dec_layers": 1,
            "history": 4,
            "horizon": 2,
            "n_context": 2,
            "dropout": 0.1,
        },
        "train": {"epochs": 1, "batch": 32},
        "run": {"n_trials": 1, "n_samples": 8, "max_steps": 10},
    }
)


def test_version():
    assert vf.__version__ == "0.1.0"


def test_terrain_deterministic_and_shaped():
    a = vf.generate_terrain(3)
    b = vf.generate_terrain(3)
    c = vf.generate_terrain(4)
    assert a["width_cells"] > 0 and a["height_cells"] > 0
    assert len(a["heights"]) == a["width_cells"] * a["height_cells"]
    assert a["heights"] == b["heights"]
    assert a["heights"] != c["heights"]


def test_terrain_config_override():
    cfg = json.dumps({"terrain": {"resolution": 0.1}})
    m = vf.generate_terrain(3, cfg)
    assert m["resolution"] == 0.1


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("corpus"))
    info = vf.generate_corpus(out, SMALL)
    assert info["episodes"] > 0
    assert info["total_steps"] > 0
    assert os.path.exists(info["manifest"])
    assert os.path.exists(os.path.join(out, "config.json"))
    return out


@pytest.fixture(scope="module")
def run_dir(corpus, tmp_path_factory):
    out = str(tmp_path_factory.mktemp("run"))
    res = vf.train(corpus, out, "vertiformer", SMALL)
    assert math.isfinite(res["best_val"])
    assert os.path.exists(res["checkpoint"])
    assert res["log_csv"].startswith("epoch,")
    return out


def test_evaluate(corpus, run_dir):
    ckpt = os.path.join(run_dir, "checkpoint_best.ckpt")
    rep = vf.evaluate(ckpt, corpus, "fkd")
    assert rep["eval_tau"] == 2
    assert rep["n_windows"] > 0
    assert math.isfinite(rep["err_avg"])

    with pytest.raises(ValueError, match="trained horizon 2"):
        vf.evaluate(ckpt, corpus, "fkd", tau=6)


def test_closed_loop_random(corpus):
    res = vf.closed_loop(config_json=SMALL, controller="random_walk")
    assert res["n_runs"] == 1
    # header + one trial row
    assert len(res["csv"].strip().split("\n")) == 2


def test_mppi_weights_normalized():
    w = vf.mppi_weights([3.0, 1.0, 2.0], 0.5)
    assert len(w) == 3
    assert abs(sum(w) - 1.0) < 1e-12
    assert w[1] == max(w)
