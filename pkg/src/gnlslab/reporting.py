"""Provenance-stamped JSON and CSV output, shared by the CLI commands.

Every artifact embeds the same provenance block: code version, a hash of
the effective configuration, the master seed, and the RNG identifier.
Two runs with the same provenance block produce byte-identical files
except for the timestamp field.
"""

from __future__ import annotations

import hashlib
import json
import math
import time

from . import __version__
from .sampling import RNG_ID

GAUSSIAN_CONVENTION = "E|g_n|^2=2; transport density exp(-(1/2)*delta||.||_{H^s}^2) exact"
PSI_CONVENTION = (
    "energy machinery uses <k>^{2s} alternating weights (exact derivative of the "
    "H^s quadratic form); arithmetic-lemma scans use the homogeneous |k|^{2s} form"
)


# keys that steer where/how results are written, not what is computed
_NON_SCIENTIFIC = {"output_dir", "emit_json", "emit_csv", "emit_binary", "threads"}


def config_hash(config: dict) -> str:
    core = {k: v for k, v in config.items() if k not in _NON_SCIENTIFIC}
    blob = json.dumps(core, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def provenance(config: dict) -> dict:
    return {
        "code_version": __version__,
        "config_hash": config_hash(config),
        "master_seed": config.get("master_seed"),
        "rng_id": RNG_ID,
        "gaussian_convention": GAUSSIAN_CONVENTION,
        "psi_convention": PSI_CONVENTION,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def _jsonable(obj):
    """Strict-JSON form: non-finite floats become null (e.g. censored
    tail points), so downstream parsers outside Python can read reports."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_report(path, report_type: str, config: dict, results: dict,
                 passed: bool | None = None, criteria: dict | None = None) -> dict:
    doc = {
        "schema_version": 1,
        "report_type": report_type,
        "provenance": provenance(config),
        "config": _jsonable(config),
        "results": _jsonable(results),
        "passed": passed,
        "criteria": _jsonable(criteria or {}),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return doc


def write_csv(path, header, rows, config: dict) -> None:
    """CSV with a '# provenance: <hash>' comment line before the header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# provenance: {config_hash(config)}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)
