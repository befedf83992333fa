"""Deterministic emitters: JSON with fixed key order and 17-significant-digit
floats, flat CSV variants, and the per-run manifest.

Identical configs must produce byte-identical artifacts, so no dict ordering,
locale, or float repr variance is allowed through here.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time


def fnum(x) -> float:
    """Round-trip-stable float for JSON (17 significant digits)."""
    return float(f"{float(x):.17g}")


def cpair(z) -> list:
    z = complex(z)
    return [fnum(z.real), fnum(z.imag)]


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False, ensure_ascii=True,
                      separators=(",", ": ")) + "\n"


def cert_report_obj(rep):
    return {
        "c": cpair(rep.c),
        "a": cpair(rep.a),
        "status": rep.status,
        "window": [fnum(w) for w in rep.window] if rep.window else [],
        "margins": {r.name: {"status": r.status,
                             "lo": fnum(r.margin.lo), "hi": fnum(r.margin.hi)}
                    for r in rep.rows},
    }


def cloud_obj(p, cloud):
    pts = [{"x": cpair(q.point.x), "y": cpair(q.point.y),
            "w": fnum(q.w_residual), "gw": fnum(q.grad_w_norm),
            "ang+": fnum(q.angle_plus), "ang-": fnum(q.angle_minus),
            "cm": fnum(q.contact_margin)} for q in cloud.points]
    return {
        "params": {"c": cpair(p.c), "a": cpair(p.a)},
        "component": cloud.label,
        "points": pts,
        "gaps": [{"at": cpair(v), "kind": k} for v, k in cloud.gaps],
    }


CLOUD_CSV_COLUMNS = ("x_re", "x_im", "y_re", "y_im", "w_residual",
                     "grad_w_norm", "angle_plus", "angle_minus",
                     "contact_margin")


def cloud_csv(cloud) -> str:
    lines = [",".join(CLOUD_CSV_COLUMNS)]
    for q in cloud.points:
        vals = (q.point.x.real, q.point.x.imag, q.point.y.real, q.point.y.imag,
                q.w_residual, q.grad_w_norm, q.angle_plus, q.angle_minus,
                q.contact_margin)
        lines.append(",".join(f"{v:.17g}" for v in vals))
    return "\n".join(lines) + "\n"


ORBIT_CSV_COLUMNS = ("word", "period", "x_re", "x_im", "y_re", "y_im", "residual")


def orbit_csv(orbits) -> str:
    lines = [",".join(ORBIT_CSV_COLUMNS)]
    for orb in orbits:
        word = "".join(str(s) for s in orb.word)
        for q in orb.points:
            lines.append(",".join([word, str(len(orb.word))]
                                  + [f"{v:.17g}" for v in
                                     (q.x.real, q.x.imag, q.y.real, q.y.imag)]
                                  + [f"{orb.residual:.17g}"]))
    return "\n".join(lines) + "\n"


def automorphism_obj(auto):
    return {
        "period": auto.period,
        "identity": auto.is_identity(),
        "bit_flip": auto.is_bit_flip(),
        "commutes_with_shift": auto.commutes_with_shift(),
        "maps": {str(q): {"".join(map(str, w)): "".join(map(str, v))
                          for w, v in sorted(perm.items())}
                 for q, perm in sorted(auto.maps.items())},
    }


def config_hash(cfg) -> str:
    canon = json.dumps(cfg.as_dict(), sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def write_with_manifest(path: str, text: str, cfg, command: str, t0: float):
    import numpy

    from . import __version__
    with open(path, "w") as fh:
        fh.write(text)
    manifest = {
        "artifact": path,
        "command": command,
        "config_hash": config_hash(cfg),
        "versions": {"henonlocus": __version__, "numpy": numpy.__version__,
                     "python": sys.version.split()[0]},
        "wall_time_s": fnum(time.time() - t0),
    }
    with open(path + ".manifest.json", "w") as fh:
        fh.write(dumps(manifest))
