"""Deterministic fingerprints of validated experiment configs"""
import hashlib
import json
from typing import Any, Dict

from dynamics.models import ExperimentConfig, MeasureSpec, SystemSpec


class ConfigFingerprintService:
    """Hash everything that changes results; the output directory does not."""

    @staticmethod
    def _system(spec: SystemSpec) -> Dict[str, Any]:
        return {
            "kind": str(spec.kind),
            "alphabet": spec.alphabet,
            "forbidden": list(spec.forbidden),
            "window": spec.window,
            "resolution": spec.resolution,
            "precision": spec.precision,
        }

    @staticmethod
    def _measure(spec: MeasureSpec) -> Dict[str, Any]:
        return {
            "kind": str(spec.kind),
            "weights": list(spec.weights),
            "orbit_length": spec.orbit_length,
            "burn_in": spec.burn_in,
        }

    @classmethod
    def build_payload(cls, config: ExperimentConfig) -> Dict[str, Any]:
        """Canonical payload of a config, with the effective seed"""
        return {
            "system": cls._system(config.system),
            "measures": [cls._measure(m) for m in config.measures],
            "instances": [
                {"system": cls._system(i.system), "measures": [cls._measure(m) for m in i.measures]}
                for i in config.instances
            ],
            "eps_ladder": list(config.eps_ladder),
            "n_ladder": list(config.n_ladder),
            "deltas": list(config.deltas),
            "budgets": {
                "monte_carlo": config.budgets.monte_carlo,
                "nodes": config.budgets.nodes,
                "points": config.budgets.points,
            },
            "radius_ladder": list(config.radius_ladder),
            "rate_statistic": str(config.rate_statistic),
            "seed": config.seed,
            "tasks": [str(task) for task in config.tasks],
        }

    @classmethod
    def generate(cls, config: ExperimentConfig) -> str:
        """Generate SHA256 fingerprint for a config"""
        payload = cls.build_payload(config)
        serialized = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(serialized.encode("utf-8")).hexdigest()
