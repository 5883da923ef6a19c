import csv

import numpy as np
import pytest

from supervisor_marl import cli, harness, oracle
from supervisor_marl.mmdp import random_mmdp, save_mmdp
from supervisor_marl.config import dumps_config, loads_config
from supervisor_marl.envs.grid import NOOP
from supervisor_marl.errors import InputError
from supervisor_marl.ppo import make_networks, save_checkpoint

SMALL = """
[task]
env = switch
agents = 2
seed = 4

[env]
max_env_steps = 20

[ppo]
total_steps = 300
steps_per_batch = 100
updates_per_iteration = 2

[eval]
model_count = 2
rollouts_per_model = 3
max_meta_steps = 400
"""


def write_config(tmp_path, text=SMALL, name="task.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


# ------------------------------------------------------------------ config


def test_config_defaults_and_sections():
    cfg = loads_config(SMALL, environ={})
    assert (cfg.env, cfg.n, cfg.observation, cfg.seed) == ("switch", 2, "individual", 4)
    assert cfg.ppo.total_steps == 300 and cfg.ppo.clip_epsilon == 0.2
    assert cfg.ppo.seed == 4
    assert cfg.model_count == 2 and cfg.eval_rollouts == 3
    assert cfg.task_name == "switch2-v0"


def test_config_environment_override():
    cfg = loads_config(SMALL, environ={"SMARL_PPO_TOTAL_STEPS": "1000", "SMARL_TASK_OBSERVATION": "collective"})
    assert cfg.ppo.total_steps == 1000
    assert cfg.task_name == "switch2-v1"


def test_config_round_trip():
    cfg = loads_config(SMALL.replace("[env]", "[env]\nstep_cost = -0.1"), environ={})
    again = loads_config(dumps_config(cfg), environ={})
    assert again == cfg


@pytest.mark.parametrize("text", [
    "[task]\nenv = switch\nagents = 5\n",
    "[task]\nenv = chess\n",
    "[task]\nenv = traffic\nagents = 5\n",
    "[task]\nenv = combat\nagents = 5\n[env]\nstep_cost = 1\n",
    "[task]\nenv = switch\nagents = two\n",
    "[bogus]\nx = 1\n",
    "[ppo]\nclip_epsilon = 2\n",
    "not an ini file",
])
def test_config_rejects_invalid(text):
    with pytest.raises(InputError):
        loads_config(text, environ={})


def test_config_inline_comments():
    cfg = loads_config("[task]\nenv = combat ; red vs blue\nagents = 6  # six\n", environ={})
    assert (cfg.env, cfg.n) == ("combat", 6)


def test_config_agent_override_flag():
    cfg = loads_config("[task]\nenv = traffic\nagents = 2\nallow_any_agents = true\n", environ={})
    assert cfg.n == 2


# ------------------------------------------------------------------- train


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_train_writes_checkpoints_metrics_and_plots(tmp_path):
    cfg = loads_config(SMALL, environ={})
    paths = harness.train(cfg, tmp_path / "run")
    assert [p.name for p in paths] == ["model_0.ckpt", "model_1.ckpt"]
    rows = read_rows(tmp_path / "run" / "metrics_model0.csv")
    assert len(rows) == 3
    steps = [int(r["meta_steps"]) for r in rows]
    assert steps == sorted(steps) and steps[-1] >= 300
    for r in rows:
        float(r["mean_actor_loss"]), float(r["mean_critic_loss"])
    assert (tmp_path / "run" / "timing_model0.csv").exists()
    assert (tmp_path / "run" / "training.png").stat().st_size > 0
    assert loads_config((tmp_path / "run" / "config.ini").read_text(), environ={}) == cfg


def test_train_rerun_is_byte_identical(tmp_path):
    cfg = loads_config(SMALL, environ={})
    harness.train(cfg, tmp_path / "a", plots=False)
    harness.train(cfg, tmp_path / "b", plots=False)
    for k in range(2):
        name = f"metrics_model{k}.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert (tmp_path / "a" / f"model_{k}.ckpt").read_bytes() == (tmp_path / "b" / f"model_{k}.ckpt").read_bytes()


def test_models_get_distinct_seeds(tmp_path):
    cfg = loads_config(SMALL, environ={})
    harness.train(cfg, tmp_path, plots=False)
    assert (tmp_path / "model_0.ckpt").read_bytes() != (tmp_path / "model_1.ckpt").read_bytes()


@pytest.mark.slow
def test_train_fifty_thousand_steps_one_model(tmp_path):
    cfg = loads_config("[task]\nenv = switch\nagents = 2\n[ppo]\ntotal_steps = 50000\n"
                       "[eval]\nmodel_count = 1\n", environ={})
    paths = harness.train(cfg, tmp_path, plots=False)
    assert len(paths) == 1 and len(list(tmp_path.glob("*.ckpt"))) == 1
    assert len(read_rows(tmp_path / "metrics_model0.csv")) >= 5


def test_cli_train(tmp_path, capsys):
    assert cli.main(["train", "--config", str(write_config(tmp_path)), "--out",
                     str(tmp_path / "out"), "--no-plots"]) == 0
    assert capsys.readouterr().out.strip().endswith("model_1.ckpt")
    assert not (tmp_path / "out" / "training.png").exists()


# ---------------------------------------------------------------- evaluate


def noop_checkpoint(cfg, path):
    compiled = harness.build_compiled(cfg)
    actor, critic = make_networks(compiled.observation_size, compiled.meta_action_count,
                                  np.random.default_rng(0))
    actor.weights[-1][...] = 0.0
    actor.biases[-1][...] = 0.0
    actor.biases[-1][NOOP] = 50.0
    save_checkpoint(path, [actor, critic], harness.checkpoint_digest(cfg))


def test_evaluate_cap_semantics(tmp_path):
    cfg = loads_config(SMALL.replace("max_env_steps = 20", "max_env_steps = 10000"), environ={})
    cfg.eval_max_meta_steps = 50
    noop_checkpoint(cfg, tmp_path / "model_0.ckpt")
    report = harness.evaluate(cfg, tmp_path)
    assert [r.meta_steps for r in report.rollouts] == [50] * 3
    assert not any(r.terminal for r in report.rollouts)
    assert report.avg_len_meta == 50 and report.best_reward == 0.0
    assert (tmp_path / "evaluation.csv").exists() and (tmp_path / "evaluation.png").exists()


def test_evaluate_is_reproducible(tmp_path):
    cfg = loads_config(SMALL, environ={})
    harness.train(cfg, tmp_path, plots=False)
    a = harness.evaluate(cfg, tmp_path, plots=False)
    b = harness.evaluate(cfg, tmp_path, plots=False)
    assert a == b
    assert len(a.rollouts) == 6
    for r in a.rollouts:
        if r.terminal:
            assert r.meta_steps % cfg.n == 0


def test_summary_reports_joint_length():
    cfg = loads_config(SMALL, environ={})
    rollouts = [harness.Rollout(0, 0, 1, 5.0, 10.0, 38, True),
                harness.Rollout(0, 1, 2, 5.0, 10.0, 60, True),
                harness.Rollout(0, 2, 3, 2.5, 5.0, 30, True)]
    report = harness.summarize(cfg, rollouts)
    assert report.best_reward == 5.0
    assert report.best_len_meta == 38 and report.best_len_joint == 19
    assert report.avg_reward == pytest.approx(12.5 / 3)
    assert report.optimum == "5"


def test_cli_evaluate_greedy(tmp_path, capsys):
    config = write_config(tmp_path)
    cli.main(["train", "--config", str(config), "--out", str(tmp_path), "--no-plots"])
    capsys.readouterr()
    assert cli.main(["evaluate", "--config", str(config), "--models", str(tmp_path), "--greedy",
                     "--no-plots"]) == 0
    rows = dict(line.split("\t") for line in capsys.readouterr().out.strip().splitlines())
    assert rows["task"] == "switch2-v0" and rows["rollouts"] == "6"
    assert (tmp_path / "evaluation_greedy.csv").exists()


def test_cli_evaluate_mismatched_checkpoint_aborts(tmp_path, capsys):
    config = write_config(tmp_path)
    cli.main(["train", "--config", str(config), "--out", str(tmp_path), "--no-plots"])
    other = write_config(tmp_path, SMALL.replace("agents = 2", "agents = 3"), "other.ini")
    assert cli.main(["evaluate", "--config", str(other), "--models", str(tmp_path)]) == 3
    assert "aborted" in capsys.readouterr().err


def test_cli_evaluate_without_checkpoints(tmp_path):
    assert cli.main(["evaluate", "--config", str(write_config(tmp_path)), "--models",
                     str(tmp_path / "missing")]) == 3


# ------------------------------------------------------------------ verify


def test_cli_verify_default_suite(capsys):
    assert cli.main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "equivalence: 50/50 pass" in out
    assert "meta_state_space_size(4, 5, 6) = 78124" in out


def test_verify_single_agent_cases_pass():
    result = harness.VerifyResult()
    for seed in range(5):
        harness.verify_mmdp(random_mmdp(seed, 4, 1, 3, 3), f"n1 {seed}", result)
    assert result.passed_cases == 5 and result.ok


def test_cli_verify_mmdp_file(tmp_path, capsys):
    path = tmp_path / "m.txt"
    save_mmdp(random_mmdp(1, 3, 2, 2, 2), path)
    assert cli.main(["verify", "--mmdp", str(path)]) == 0
    assert "1/1 pass" in capsys.readouterr().out


def test_cli_verify_detects_corrupted_rewards(monkeypatch, capsys):
    real = oracle.build_compiled_mdp

    def corrupted(m):
        built = real(m)
        built.mdp.reward[built.mdp.reward != 0] += 0.5
        return built

    monkeypatch.setattr(oracle, "build_compiled_mdp", corrupted)
    assert cli.main(["verify", "--cases", "5", "--seed", "3"]) == 2
    err = capsys.readouterr().err
    assert "failure: case" in err and "seed=" in err


def test_cli_usage_errors(capsys):
    assert cli.main(["verify", "--cases", "0"]) == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["enumerate", "--actions", "x"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 1


# ----------------------------------------------------------------- inspect


def test_cli_inspect_frames(tmp_path, capsys):
    assert cli.main(["inspect", "--config", str(write_config(tmp_path)), "--steps", "4"]) == 0
    out = capsys.readouterr().out
    assert out.count("--- frame") == 2
    assert out.count("assign a_") == 4
    assert "meta-step 1: assign a_" in out and "L=(a_" in out


def test_inspect_stops_at_terminal(tmp_path):
    cfg = loads_config(SMALL.replace("max_env_steps = 20", "max_env_steps = 1"), environ={})
    lines = list(harness.inspect_rollout(cfg, steps=10))
    assert lines[-1].startswith("episode finished after 2 meta-steps")


def test_inspect_with_checkpoint(tmp_path):
    cfg = loads_config(SMALL, environ={})
    noop_checkpoint(cfg, tmp_path / "m.ckpt")
    lines = list(harness.inspect_rollout(cfg, tmp_path / "m.ckpt", steps=2))
    assert "assign a_4 (noop)" in lines[2]


# --------------------------------------------------------------- enumerate


def enumerate_rows(capsys, *args):
    assert cli.main(["enumerate", *args]) == 0
    return dict(line.split("\t") for line in capsys.readouterr().out.strip().splitlines())


def test_cli_enumerate_paper_example(capsys):
    rows = enumerate_rows(capsys, "--actions", "5", "--agents", "6")
    assert rows["joint_actions"] == "15625" and rows["supervisor_actions"] == "5"


def test_cli_enumerate_single_agent(capsys):
    rows = enumerate_rows(capsys, "--actions", "7", "--agents", "1")
    assert rows["joint_actions"] == rows["supervisor_actions"] == "7"


def test_cli_enumerate_multiplier(capsys):
    rows = enumerate_rows(capsys, "--actions", "2", "--agents", "10", "--states", "1")
    assert rows["joint_actions"] == "1024" and rows["meta_states_per_state"] == "2047"


def test_cli_enumerate_overflow(capsys):
    assert cli.main(["enumerate", "--actions", "10", "--agents", "30"]) == 1
    assert "error" in capsys.readouterr().err
