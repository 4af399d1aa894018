import json

import pytest

from endonav.config import (ConfigError, load_task_file,
                            run_config_from_document, task_from_document)


def task_doc(**over):
    doc = {
        "phantom": {"generator": "simplified", "params": {}},
        "start": "start",
        "goal": "endpoint_a",
    }
    doc.update(over)
    return doc


class TestTaskDocument:
    def test_minimal_document(self):
        task, seed = task_from_document(task_doc())
        assert task.start == 0
        assert task.goal == task.graph.labels["endpoint_a"]
        assert seed is None

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="startt"):
            task_from_document(task_doc(startt=3))

    def test_unknown_reward_key_rejected(self):
        with pytest.raises(ConfigError, match="bogus"):
            task_from_document(task_doc(reward={"bogus": 1}))

    def test_unknown_label_names_available(self):
        with pytest.raises(ConfigError, match="endpoint_z"):
            task_from_document(task_doc(goal="endpoint_z"))

    def test_node_ids_accepted(self):
        task, _ = task_from_document(task_doc(start=0, goal=90))
        assert task.goal == 90

    def test_phantom_file_reference(self, tmp_path):
        from endonav import generate_simplified_phantom, save_centerline_file
        path = tmp_path / "y.json"
        save_centerline_file(generate_simplified_phantom(), path)
        doc = task_doc(phantom={"file": "y.json"})
        task, _ = task_from_document(doc, base_dir=str(tmp_path))
        assert len(task.graph) == 131

    def test_phantom_unknown_generator(self):
        with pytest.raises(ConfigError, match="unknown generator"):
            task_from_document(task_doc(phantom={"generator": "wiggly"}))

    def test_phantom_unknown_param(self):
        doc = task_doc(phantom={"generator": "simplified",
                                "params": {"trunk_lengthh": 10}})
        with pytest.raises(ConfigError, match="trunk_lengthh"):
            task_from_document(doc)

    def test_reward_and_wire_applied(self):
        doc = task_doc(reward={"mode": "shaped_euclidean", "dist_scale": 50},
                       wire={"branch_noise_sigma": 0.5}, alpha=1.5,
                       max_steps=42, seed=9)
        task, seed = task_from_document(doc)
        assert task.reward.mode == "shaped_euclidean"
        assert task.reward.dist_scale == 50
        assert task.wire.branch_noise_sigma == 0.5
        assert task.alpha == 1.5
        assert task.max_steps == 42
        assert seed == 9

    def test_load_task_file(self, tmp_path):
        path = tmp_path / "task.json"
        path.write_text(json.dumps(task_doc()))
        task, _ = load_task_file(path)
        assert task.goal == task.graph.labels["endpoint_a"]


class TestRunConfig:
    def test_full_document(self):
        doc = {"task": task_doc(), "ddpg": {"total_steps": 1000, "seed": 3}}
        task, seed, cfg = run_config_from_document(doc)
        assert cfg.total_steps == 1000
        assert cfg.seed == 3

    def test_unknown_ddpg_key_named(self):
        doc = {"task": task_doc(), "ddpg": {"learning_rate": 1e-4}}
        with pytest.raises(ConfigError, match="learning_rate"):
            run_config_from_document(doc)

    def test_missing_task_rejected(self):
        with pytest.raises(ConfigError, match="task"):
            run_config_from_document({"ddpg": {}})

    def test_unknown_top_key_rejected(self):
        with pytest.raises(ConfigError, match="tak"):
            run_config_from_document({"task": task_doc(), "tak": {}})
