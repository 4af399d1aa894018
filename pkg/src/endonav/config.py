"""Structured-text (JSON) documents for tasks and training runs.

Document parsing is strict: unknown keys are rejected by name rather than
silently ignored, so typos never change behavior.
"""
from __future__ import annotations

import dataclasses
import inspect
import json
import os

from .ddpg import DdpgConfig
from .env import TaskSpec
from .guidewire import GuidewireConfig
from .phantoms import generate_complex_phantom, generate_simplified_phantom
from .reward import RewardConfig
from .vesselgraph import VesselGraph, load_centerline_file


class ConfigError(ValueError):
    """Malformed task or run configuration document."""


GENERATORS = {
    "simplified": generate_simplified_phantom,
    "complex": generate_complex_phantom,
}


def _check_keys(mapping, allowed, where):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {where}")


def _dataclass_from(mapping, cls, where):
    names = [f.name for f in dataclasses.fields(cls)]
    _check_keys(mapping, names, where)
    kwargs = dict(mapping)
    if "hidden" in kwargs:
        kwargs["hidden"] = tuple(kwargs["hidden"])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_phantom(spec: dict, base_dir=".") -> VesselGraph:
    """Phantom reference: {"file": path} or {"generator": name, "params": {...}}."""
    _check_keys(spec, ("file", "generator", "params"), "phantom")
    if "file" in spec:
        if "generator" in spec or "params" in spec:
            raise ConfigError("phantom: give either 'file' or 'generator', not both")
        path = spec["file"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return load_centerline_file(path)
    if "generator" not in spec:
        raise ConfigError("phantom: needs 'file' or 'generator'")
    name = spec["generator"]
    if name not in GENERATORS:
        raise ConfigError(f"phantom: unknown generator {name!r} "
                          f"(expected one of {sorted(GENERATORS)})")
    fn = GENERATORS[name]
    params = spec.get("params", {})
    allowed = list(inspect.signature(fn).parameters)
    _check_keys(params, allowed, f"phantom params for {name!r}")
    try:
        return fn(**params)
    except ValueError as exc:
        raise ConfigError(f"phantom generation failed: {exc}") from exc


def resolve_node(graph: VesselGraph, ref, where) -> int:
    """Node reference: integer id or a label name from the document."""
    if isinstance(ref, bool) or ref is None:
        raise ConfigError(f"{where}: expected node id or label, got {ref!r}")
    if isinstance(ref, int):
        if not 0 <= ref < len(graph):
            raise ConfigError(f"{where}: node id {ref} out of range")
        return ref
    if isinstance(ref, str):
        if ref not in graph.labels:
            raise ConfigError(f"{where}: unknown label {ref!r} "
                              f"(available: {sorted(graph.labels)})")
        return graph.labels[ref]
    raise ConfigError(f"{where}: expected node id or label, got {ref!r}")


_TASK_KEYS = ("phantom", "start", "goal", "alpha", "max_steps", "reward",
              "wire", "seed")


def task_from_document(doc: dict, base_dir="."):
    """Build (TaskSpec, seed or None) from a task document mapping."""
    _check_keys(doc, _TASK_KEYS, "task document")
    for key in ("phantom", "start", "goal"):
        if key not in doc:
            raise ConfigError(f"task document: missing required key {key!r}")
    graph = build_phantom(doc["phantom"], base_dir=base_dir)
    reward = _dataclass_from(doc.get("reward", {}), RewardConfig, "reward")
    wire = _dataclass_from(doc.get("wire", {}), GuidewireConfig, "wire")
    try:
        task = TaskSpec(
            graph=graph,
            start=resolve_node(graph, doc["start"], "start"),
            goal=resolve_node(graph, doc["goal"], "goal"),
            reward=reward,
            wire=wire,
            alpha=float(doc.get("alpha", 0.0)),
            max_steps=int(doc.get("max_steps", 300)),
        )
    except ValueError as exc:
        raise ConfigError(f"task document: {exc}") from exc
    seed = doc.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    return task, seed


def load_task_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return task_from_document(doc, base_dir=os.path.dirname(os.path.abspath(path)))


def run_config_from_document(doc: dict, base_dir="."):
    """Training run document: {"task": {...}, "ddpg": {...}}.

    Returns (TaskSpec, task seed or None, DdpgConfig).
    """
    _check_keys(doc, ("task", "ddpg"), "run config")
    if "task" not in doc:
        raise ConfigError("run config: missing required key 'task'")
    task, task_seed = task_from_document(doc["task"], base_dir=base_dir)
    ddpg = _dataclass_from(doc.get("ddpg", {}), DdpgConfig, "ddpg")
    return task, task_seed, ddpg


def load_run_config_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return run_config_from_document(
        doc, base_dir=os.path.dirname(os.path.abspath(path)))
