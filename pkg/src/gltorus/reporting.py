"""Report emission: deterministic CSV for curves, JSON for scalars, and
matplotlib figures rendered to files alongside the delimited output.  The
run manifest lists every emitted file with a content hash."""

from __future__ import annotations

import csv
import hashlib
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_csv(path, header, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


class _JSONEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, (np.bool_,)):
            return bool(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


def write_json(path, obj):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, cls=_JSONEncoder)
        fh.write("\n")
    return path


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir, config_echo, files, timings=None, extra=None):
    entries = {os.path.relpath(f, out_dir): sha256_file(f) for f in files}
    manifest = {
        "config": config_echo,
        "files": entries,
        "timings": timings or {},
        "versions": _versions(),
    }
    if extra:
        manifest.update(extra)
    return write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _versions():
    import matplotlib as mpl

    from . import __version__

    return {"gltorus": __version__, "numpy": np.__version__, "matplotlib": mpl.__version__}


def _save(fig, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def monotonicity_figure(ledger, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax1.plot(ledger.radii, ledger.Z, "o-", label="Z(R)")
    ax1.set_xlabel("R")
    ax1.set_ylabel("Z")
    ax1.legend()
    ax2.plot(ledger.radii, ledger.zprime, "s-", label="Z'(R) reconstructed")
    mid = 0.5 * (ledger.radii[1:] + ledger.radii[:-1])
    ax2.plot(mid, np.diff(ledger.Z) / np.diff(ledger.radii), "k.--", label="dZ/dR")
    ax2.set_xlabel("R")
    ax2.legend()
    fig.suptitle("weighted-energy scan")
    return _save(fig, path)


def ring_figure(track, path):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.plot(track.times, track.radii, "o-", label="measured r(t)")
    ax.plot(track.times, track.r_exact, "k--", label="sqrt(r0^2 - 2t)")
    ax.set_xlabel("t")
    ax.set_ylabel("ring radius")
    ax.legend()
    return _save(fig, path)


def clearing_figure(samples, path):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    kinds = sorted({s["kind"] for s in samples})
    for kind in kinds:
        xs = [s["E_norm"] for s in samples if s["kind"] == kind]
        ys = [s["one_minus_mod"] for s in samples if s["kind"] == kind]
        ax.scatter(xs, ys, s=18, label=kind)
    ax.set_xlabel("weighted energy / |log eps|")
    ax.set_ylabel("1 - |u(x_T, T)|")
    ax.legend()
    return _save(fig, path)


def density_figure(sample, path):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.plot(sample.radii, sample.theta / np.pi, "o-", label="theta(r) / pi")
    ax.plot(sample.radii, sample.theta_parabolic / np.pi, "s--", label="parabolic / pi")
    ax.axhline(1.0, color="k", lw=0.8)
    ax.set_xlabel("r")
    ax.legend()
    return _save(fig, path)


def vortex_figure(vortex_set, path):
    fig, ax = plt.subplots(figsize=(4.4, 4.4))
    if vortex_set.dim == 2:
        for (pos, deg) in vortex_set.points:
            ax.plot(pos[0], pos[1], "r+" if deg > 0 else "bx", ms=10)
    else:
        for fil in vortex_set.filaments:
            ax.plot(fil.vertices[:, 0], fil.vertices[:, 1], ".", ms=2)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"vortex set, t = {vortex_set.time:.4g}")
    return _save(fig, path)


def energy_figure(times, energies, path):
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(times, energies, "-")
    ax.set_xlabel("t")
    ax.set_ylabel("total energy")
    return _save(fig, path)
