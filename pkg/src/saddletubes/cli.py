"""Command-line front end and file I/O for the transport pipeline.

Subcommands cover the pipeline stages (equilibria, upo, tube,
connections, graph, shadow, hills, pcr3bp-points) plus canned dataset
recipes for the survey figures (``figure``).  All numeric output is
CSV (trajectories, cuts) or JSON (structured results); every dataset
directory gets a manifest carrying the exact configuration, its sha256
hash, and the library version -- no timestamps, so identical configs
byte-reproduce identical outputs.

Exit codes: 0 success, 2 usage/configuration error, 3 numerical
failure (the module error is reported as JSON on stderr).
"""

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .errors import SaddleTubesError
from .models import model_from_config, hills_region_grid
from .integrate import IntegratorConfig, DEFAULT_CONFIG, trajectory_to_csv
from .sections import SectionSpec
from .equilibria import enumerate_equilibria, equilibrium_by_label
from .upo import upo_at_energy, sample_orbit
from .manifolds import (UNSTABLE, STABLE, seed_tube, globalize_tube,
                        interior_iterate, polygon_contains,
                        section_state_at_energy)
from .connections import (SampledPath, ConnectionOrbit, intersect_cuts,
                          homoclinic_cuts, find_homoclinics,
                          heteroclinics_between_saddles,
                          reverse_connection)
from .itinerary import (ConnectionGraph, Edge, Walk, ShadowSpec, build_graph,
                        construct_shadow_orbit)

TWO_PI = 2.0 * math.pi

_SYSTEM_KINDS = ("physical_dp", "point_mass_dp", "pcr3bp")

FIGURE_IDS = ("fig6", "fig7", "fig8", "fig9", "fig11", "fig12", "fig13")

# Fig. 7's energy ladder for the Down-Up homoclinic census.
LADDER_ENERGIES = (-0.147, -0.07, -0.034, 0.06, 0.102, 0.157)


# ---------------------------------------------------------------------------
# config / output plumbing


def _canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _config_digest(config):
    return hashlib.sha256(_canonical_json(config).encode()).hexdigest()


def _jsonable(x):
    """Recursively coerce numpy scalars/arrays for json.dump."""
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _print_json(obj):
    json.dump(_jsonable(obj), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _write_manifest(outdir, stem, config, **extra):
    doc = {"version": __version__,
           "config": _jsonable(config),
           "config_sha256": _config_digest(_jsonable(config))}
    doc.update(_jsonable(extra))
    path = os.path.join(outdir, stem + ".manifest.json")
    _write_json(path, doc)
    return path


def _load_run_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("--config must contain a JSON object")
    return cfg


def _resolve_out(args, run_cfg):
    # env var wins, then the flag, then the config file
    out = os.environ.get("TUBE_OUT") or getattr(args, "out", None) \
        or run_cfg.get("out") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _resolve_model(args, run_cfg):
    """--system takes a builtin kind or a model-JSON path; --config may
    carry a full model spec under "system"."""
    spec = getattr(args, "system", None)
    if spec is None:
        spec = run_cfg.get("system")
    if spec is None:
        raise ValueError("no system given (use --system or a config file)")
    if isinstance(spec, str) and spec in _SYSTEM_KINDS:
        spec = {"kind": spec, "params": run_cfg.get("params", {})}
    model = model_from_config(spec)
    return model, {"kind": model.kind, "params": _jsonable(model.params)}


def _integrator_config(run_cfg, rel=None):
    icfg = dict(run_cfg.get("integrator", {}))
    if rel is not None:
        icfg.setdefault("rel_tol", rel)
        icfg.setdefault("abs_tol", rel)
    return IntegratorConfig(**icfg) if icfg else DEFAULT_CONFIG


def _map_fn(workers):
    if workers and workers > 1:
        pool = ThreadPoolExecutor(max_workers=workers)
        return pool.map
    return None


def _section_config(section):
    cfg = {"kind": section.kind, "value": section.value}
    if section.which is not None:
        cfg["which"] = int(section.which)
    if section.crossing_direction is not None:
        cfg["crossing_direction"] = int(section.crossing_direction)
    return cfg


def _fmt(x):
    return "%.17g" % float(x)


# ---------------------------------------------------------------------------
# simple table subcommands


def cmd_equilibria(args):
    run_cfg = _load_run_config(args.config)
    model, model_cfg = _resolve_model(args, run_cfg)
    rows = []
    for eq in enumerate_equilibria(model):
        rows.append({
            "label": eq.label,
            "state": list(eq.state),
            "energy": eq.energy,
            "classification": eq.classification,
            "eigenvalues": [[lam.real, lam.imag] for lam in eq.eigenvalues],
        })
    _print_json(rows)
    if args.out or os.environ.get("TUBE_OUT"):
        outdir = _resolve_out(args, run_cfg)
        _write_json(os.path.join(outdir, "equilibria.json"), rows)
        _write_manifest(outdir, "equilibria", {"model": model_cfg},
                        n_equilibria=len(rows))
    return 0


def cmd_pcr3bp_points(args):
    model = model_from_config({"kind": "pcr3bp", "params": {"mu": args.mu}})
    xs = {}
    for label in ("L1", "L2"):
        xs[label] = float(equilibrium_by_label(model, label).state[0])
    # the quintic solved to machine precision, printed shortest-round-trip
    print("x_L1=%r" % xs["L1"])
    print("x_L2=%r" % xs["L2"])
    return 0


def cmd_hills(args):
    run_cfg = _load_run_config(args.config)
    model, model_cfg = _resolve_model(args, run_cfg)
    outdir = _resolve_out(args, run_cfg)
    bounds = None
    if args.bounds:
        vals = [float(v) for v in args.bounds.split(",")]
        if len(vals) != 4:
            raise ValueError("--bounds wants q1min,q1max,q2min,q2max")
        bounds = ((vals[0], vals[1]), (vals[2], vals[3]))
    q1, q2, acc = hills_region_grid(model, args.energy, bounds=bounds,
                                    resolution=args.resolution)
    stem = "hills_%s_h%s" % (model.kind, args.energy)
    path = os.path.join(outdir, stem + ".csv")
    with open(path, "w") as fh:
        fh.write("q1,q2,accessible\n")
        for j in range(len(q2)):
            for i in range(len(q1)):
                fh.write("%s,%s,%d\n" % (_fmt(q1[i]), _fmt(q2[j]),
                                         int(acc[j, i])))
    frac = float(np.count_nonzero(acc)) / acc.size
    cfg = {"model": model_cfg, "energy": args.energy,
           "resolution": args.resolution,
           "bounds": _jsonable(bounds)}
    _write_manifest(outdir, stem, cfg, accessible_fraction=frac,
                    files=[os.path.basename(path)])
    _print_json({"csv": path, "accessible_fraction": frac})
    return 0


# ---------------------------------------------------------------------------
# orbit / tube subcommands


def cmd_upo(args):
    run_cfg = _load_run_config(args.config)
    model, model_cfg = _resolve_model(args, run_cfg)
    outdir = _resolve_out(args, run_cfg)
    saddle = equilibrium_by_label(model, args.saddle)
    orbit = upo_at_energy(model, saddle, args.energy)
    doc = {
        "saddle": args.saddle,
        "anchor": list(orbit.anchor),
        "period": orbit.period,
        "energy": orbit.energy,
        "multipliers": list(orbit.multipliers),
    }
    _print_json(doc)
    stem = "upo_%s_%s_h%s" % (model.kind, args.saddle, args.energy)
    _write_json(os.path.join(outdir, stem + ".json"), doc)
    times, states = sample_orbit(model, orbit, args.samples)
    path = os.path.join(outdir, stem + ".csv")
    trajectory_to_csv(SampledPath(times=times, states=states), model, path)
    cfg = {"model": model_cfg, "saddle": args.saddle, "energy": args.energy,
           "samples": args.samples}
    _write_manifest(outdir, stem, cfg, period=orbit.period,
                    files=[stem + ".json", stem + ".csv"])
    return 0


def _section_from_args(args, model, orbit):
    if args.section:
        return SectionSpec.from_config(json.loads(args.section))
    if model.kind == "pcr3bp":
        return SectionSpec.pcr3bp_y0()
    # default: one whole turn of the inverted arm, as in the homoclinic hunt
    ang = list(model.angle_indices)
    upness = [abs(math.remainder(orbit.anchor[i] - math.pi, TWO_PI))
              for i in ang]
    arm = ang[int(np.argmin(upness))]
    base = TWO_PI * round((orbit.anchor[arm] + math.pi) / TWO_PI)
    return SectionSpec.angle(arm, base)


def _cut_to_csv(cut, branch, path):
    """Cut CSV, one row per seed: phase, plane coords, full state, flight
    time, and a completeness flag (incomplete seeds keep only the phase)."""
    done = {round(float(p), 12): i for i, p in enumerate(cut.phases)}
    with open(path, "w") as fh:
        fh.write("phase,c1,c2,q1,q2,v1,v2,flight_time,complete\n")
        for p in branch.seed_times:
            i = done.get(round(float(p), 12))
            if i is None:
                fh.write("%s,nan,nan,nan,nan,nan,nan,nan,0\n" % _fmt(p))
                continue
            row = ([_fmt(p)] + [_fmt(c) for c in cut.coords[i]]
                   + [_fmt(c) for c in cut.full_states[i]]
                   + [_fmt(cut.flight_times[i]), "1"])
            fh.write(",".join(row) + "\n")


def cmd_tube(args):
    run_cfg = _load_run_config(args.config)
    model, model_cfg = _resolve_model(args, run_cfg)
    outdir = _resolve_out(args, run_cfg)
    saddle = equilibrium_by_label(model, args.saddle)
    orbit = upo_at_energy(model, saddle, args.energy)
    stability = UNSTABLE if args.stability == "unstable" else STABLE
    section = _section_from_args(args, model, orbit)
    cfg_i = _integrator_config(run_cfg, rel=args.rel_tol)
    branch = seed_tube(model, orbit, stability, sign=args.sign, eps=args.eps,
                       n_seeds=args.seeds, cfg=cfg_i)
    direction = args.direction
    cut = globalize_tube(model, branch, section, crossing_direction=direction,
                         cfg=cfg_i, map_fn=_map_fn(args.workers))
    stem = "tube_%s_%s_h%s_%s" % (model.kind, args.saddle, args.energy,
                                  args.stability)
    path = os.path.join(outdir, stem + ".csv")
    _cut_to_csv(cut, branch, path)
    cfg = {"model": model_cfg, "saddle": args.saddle, "energy": args.energy,
           "stability": args.stability, "sign": args.sign, "eps": args.eps,
           "seeds": args.seeds, "section": _section_config(section),
           "direction": direction, "rel_tol": args.rel_tol}
    _write_manifest(outdir, stem, cfg, n_seeds=branch.n_seeds,
                    n_complete=len(cut), incomplete_count=cut.incomplete_count,
                    closed=cut.closed, energy=cut.energy,
                    files=[os.path.basename(path)])
    _print_json({"csv": path, "n_complete": len(cut), "closed": cut.closed,
                 "incomplete_count": cut.incomplete_count})
    return 0


# ---------------------------------------------------------------------------
# connection / graph serialization


def _connection_record(conn, csv_name=None):
    rec = {
        "kind": conn.kind,
        "section_point": list(conn.point),
        "symmetric": bool(conn.symmetric),
        "rotation_signature": [int(r) for r in conn.rotation_signature],
        "mismatch": float(conn.mismatch),
        "state": list(conn.state),
        "section": _section_config(conn.section),
        "phase_u": conn.phase_u,
        "phase_s": conn.phase_s,
        "flight_u": conn.flight_u,
        "flight_s": conn.flight_s,
        "source_saddle": conn.source_upo.saddle_label,
        "target_saddle": conn.target_upo.saddle_label,
    }
    if csv_name is not None:
        rec["trajectory_csv"] = csv_name
    return rec


def _emit_connections(model, conns, outdir, stem, config):
    records = []
    files = []
    for i, c in enumerate(conns):
        name = "%s_%02d.csv" % (stem, i)
        trajectory_to_csv(c.trajectory, model, os.path.join(outdir, name))
        records.append(_connection_record(c, name))
        files.append(name)
    _write_json(os.path.join(outdir, stem + ".json"), records)
    _write_manifest(outdir, stem, config, n_connections=len(conns),
                    files=files + [stem + ".json"])
    return records


def cmd_connections(args):
    run_cfg = _load_run_config(args.config)
    model, model_cfg = _resolve_model(args, run_cfg)
    outdir = _resolve_out(args, run_cfg)
    cut_cfg = _integrator_config(run_cfg, rel=args.rel_tol)
    if args.type == "hom":
        src = args.src or _default_saddle(model)
        saddle = equilibrium_by_label(model, src)
        orbit = upo_at_energy(model, saddle, args.energy)
        conns = find_homoclinics(model, orbit, lift_turns=args.lift_turns,
                                 n_seeds=args.seeds, eps=args.eps,
                                 cut_cfg=cut_cfg)
        stem = "hom_%s_%s_h%s" % (model.kind, src, args.energy)
    else:
        if not (args.src and args.dst):
            raise ValueError("--type het needs --src and --dst")
        conns = heteroclinics_between_saddles(
            model, equilibrium_by_label(model, args.src),
            equilibrium_by_label(model, args.dst), args.energy,
            n_seeds=args.seeds, eps=args.eps, cut_cfg=cut_cfg)
        stem = "het_%s_%s_to_%s_h%s" % (model.kind, args.src, args.dst,
                                        args.energy)
    cfg = {"model": model_cfg, "energy": args.energy, "type": args.type,
           "src": args.src, "dst": args.dst, "seeds": args.seeds,
           "eps": args.eps, "lift_turns": args.lift_turns,
           "rel_tol": args.rel_tol}
    records = _emit_connections(model, conns, outdir, stem, cfg)
    _print_json([{k: r[k] for k in ("kind", "section_point", "symmetric",
                                    "rotation_signature", "mismatch")}
                 for r in records])
    return 0


def _default_saddle(model):
    if model.kind == "pcr3bp":
        return "L1"
    return "DownUp"


def _graph_doc(model_cfg, graph, edge_csvs):
    verts = [{"label": v.saddle_label, "anchor": list(v.anchor),
              "period": v.period} for v in graph.vertices]
    edges = []
    for i, e in enumerate(graph.edges):
        rec = _connection_record(e.connection, edge_csvs[i])
        rec.update({"name": "e%d" % i, "source": e.source,
                    "target": e.target})
        edges.append(rec)
    return {"format": "saddletubes-graph", "version": __version__,
            "model": model_cfg, "energy": graph.energy,
            "vertices": verts, "edges": edges}


def _write_graph(model, model_cfg, graph, outdir, stem, config):
    csvs = []
    for i, e in enumerate(graph.edges):
        name = "%s_e%d.csv" % (stem, i)
        trajectory_to_csv(e.connection.trajectory, model,
                          os.path.join(outdir, name))
        csvs.append(name)
    doc = _graph_doc(model_cfg, graph, csvs)
    path = os.path.join(outdir, stem + ".json")
    _write_json(path, doc)
    _write_manifest(outdir, stem, config, n_vertices=len(graph.vertices),
                    n_edges=len(graph.edges), files=csvs + [stem + ".json"])
    return path, doc


def _read_traj_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    return SampledPath(times=data[:, 0], states=data[:, 1:5])


def _load_graph(path):
    """Rebuild a ConnectionGraph (with live orbits) from a graph JSON."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "saddletubes-graph":
        raise ValueError("%s is not a connection-graph file" % path)
    model = model_from_config(doc["model"])
    energy = float(doc["energy"])
    base_dir = os.path.dirname(os.path.abspath(path))

    bases = {}
    vertices = []
    for v in doc["vertices"]:
        if v["label"] not in bases:
            bases[v["label"]] = upo_at_energy(
                model, equilibrium_by_label(model, v["label"]), energy)
        base = bases[v["label"]]
        want = np.asarray(v["anchor"], dtype=float)
        delta = np.zeros(4)
        for i in model.angle_indices:
            delta[i] = TWO_PI * round((want[i] - base.anchor[i]) / TWO_PI)
        orbit = base.shifted(delta) if np.any(delta) else base
        if np.max(np.abs(orbit.anchor - want)) > 1e-6:
            raise SaddleTubesError(
                "stored vertex anchor %s is not a lift of the recomputed "
                "orbit %s" % (want, base.anchor))
        vertices.append(orbit)

    edges = []
    for e in doc["edges"]:
        traj = _read_traj_csv(os.path.join(base_dir, e["trajectory_csv"]))
        conn = ConnectionOrbit(
            kind=e["kind"],
            source_upo=vertices[e["source"]],
            target_upo=vertices[e["target"]],
            section=SectionSpec.from_config(e["section"]),
            point=np.asarray(e["section_point"], dtype=float),
            state=np.asarray(e["state"], dtype=float),
            trajectory=traj,
            symmetric=bool(e["symmetric"]),
            rotation_signature=tuple(e["rotation_signature"]),
            mismatch=float(e["mismatch"]),
            phase_u=e.get("phase_u"),
            phase_s=e.get("phase_s"),
            flight_u=e.get("flight_u"),
            flight_s=e.get("flight_s"),
        )
        edges.append(Edge(connection=conn, source=int(e["source"]),
                          target=int(e["target"])))
    return model, ConnectionGraph(vertices=vertices, edges=edges,
                                  energy=energy), doc


def cmd_graph(args):
    run_cfg = _load_run_config(args.config)
    model, model_cfg = _resolve_model(args, run_cfg)
    outdir = _resolve_out(args, run_cfg)
    cut_cfg = _integrator_config(run_cfg, rel=args.rel_tol)
    labels = [s.strip() for s in args.saddles.split(",") if s.strip()]
    orbits, conns = [], []
    for lab in labels:
        orbit = upo_at_energy(model, equilibrium_by_label(model, lab),
                              args.energy)
        orbits.append(orbit)
        conns.extend(find_homoclinics(model, orbit, n_seeds=args.seeds,
                                      eps=args.eps, cut_cfg=cut_cfg))
    if args.heteroclinics and len(labels) >= 2:
        hets = heteroclinics_between_saddles(
            model, equilibrium_by_label(model, labels[0]),
            equilibrium_by_label(model, labels[1]), args.energy,
            n_seeds=args.seeds, eps=args.eps, cut_cfg=cut_cfg)
        conns.extend(hets)
        for h in hets:
            conns.append(reverse_connection(model, h))
        # the reversed edges end on lifts of the sources; register them
        orbits.extend([h.target_upo for h in hets])
        orbits.extend([reverse_connection(model, h).target_upo
                       for h in hets])
    # homoclinic targets are shifted lifts identified with their sources,
    # so the vertex list is just the orbits themselves
    graph = build_graph(orbits, conns)
    stem = "graph_%s_h%s" % (model.kind, args.energy)
    cfg = {"model": model_cfg, "energy": args.energy, "saddles": labels,
           "seeds": args.seeds, "eps": args.eps,
           "heteroclinics": bool(args.heteroclinics),
           "rel_tol": args.rel_tol}
    path, doc = _write_graph(model, model_cfg, graph, outdir, stem, cfg)
    _print_json({"graph": path, "n_vertices": len(doc["vertices"]),
                 "n_edges": len(doc["edges"])})
    return 0


def cmd_shadow(args):
    run_cfg = _load_run_config(args.config)
    outdir = _resolve_out(args, run_cfg)
    model, graph, doc = _load_graph(args.graph)
    tokens = [t.strip() for t in args.walk.split(",") if t.strip()]
    idx = []
    for t in tokens:
        if not t.startswith("e"):
            raise ValueError("walk tokens look like e0,e1,...; got %r" % t)
        i = int(t[1:])
        if not (0 <= i < len(graph.edges)):
            raise ValueError("edge %r is not in the graph (%d edges)"
                             % (t, len(graph.edges)))
        idx.append(i)
    for a, b in zip(idx[:-1], idx[1:]):
        if graph.edges[a].target != graph.edges[b].source:
            raise ValueError("walk does not compose: e%d ends at vertex %d "
                             "but e%d starts at %d"
                             % (a, graph.edges[a].target, b,
                                graph.edges[b].source))
    vseq = [graph.edges[idx[0]].source] + [graph.edges[i].target for i in idx]
    walk = Walk(edges=tuple(idx), vertices=tuple(vseq),
                closed=vseq[0] == vseq[-1])
    wraps = tuple(int(w) for w in args.wraps.split(","))
    spec = ShadowSpec(graph=graph, walk=walk, wraps=wraps, kind=args.kind)
    shadow = construct_shadow_orbit(model, spec, tol=args.tol)
    stem = "shadow_%s_%s" % (args.kind, "-".join(tokens))
    csv_path = os.path.join(outdir, stem + ".csv")
    trajectory_to_csv(SampledPath(times=shadow.times, states=shadow.states),
                      model, csv_path)
    diag = {
        "residual": shadow.residual,
        "closure_residual": shadow.closure_residual,
        "dwell_counts": list(shadow.dwell_counts),
        "total_time": shadow.total_time,
        "rotation_offset": list(shadow.rotation_offset),
        "walk": tokens,
        "wraps": list(wraps),
        "kind": args.kind,
    }
    _write_json(os.path.join(outdir, stem + ".json"), diag)
    cfg = {"graph": os.path.basename(args.graph),
           "graph_sha256": _config_digest(doc),
           "walk": tokens, "wraps": list(wraps), "kind": args.kind,
           "tol": args.tol}
    _write_manifest(outdir, stem, cfg,
                    files=[stem + ".csv", stem + ".json"])
    _print_json(diag)
    return 0


# ---------------------------------------------------------------------------
# figure recipes


def _figure_outdir(args, run_cfg, figure_id):
    root = _resolve_out(args, run_cfg)
    outdir = os.path.join(root, figure_id)
    os.makedirs(outdir, exist_ok=True)
    return outdir


def _fig6(model, model_cfg, outdir, args):
    """UPO families near the two index-1 saddles, projected samples."""
    rows = []
    files = []
    for label in ("DownUp", "UpDown"):
        saddle = equilibrium_by_label(model, label)
        for k, dh in enumerate((0.01, 0.04, 0.09, 0.16)):
            orbit = upo_at_energy(model, saddle, saddle.energy + dh)
            times, states = sample_orbit(model, orbit, 400)
            name = "fig6_upo_%s_%d.csv" % (label, k)
            trajectory_to_csv(SampledPath(times=times, states=states),
                              model, os.path.join(outdir, name))
            rows.append({"saddle": label, "energy": orbit.energy,
                         "period": orbit.period,
                         "anchor": list(orbit.anchor), "csv": name})
            files.append(name)
    _write_json(os.path.join(outdir, "fig6_families.json"), rows)
    return {"families": rows}, files + ["fig6_families.json"]


def _fig7(model, model_cfg, outdir, args):
    """Down-Up homoclinic cuts across the energy ladder, with candidate
    intersection counts (the census behind the nondecreasing claim)."""
    cut_cfg = _integrator_config({}, rel=1e-10)
    saddle = equilibrium_by_label(model, "DownUp")
    summary = []
    files = []
    for h in LADDER_ENERGIES:
        orbit = upo_at_energy(model, saddle, h)
        cu, cs, _target = homoclinic_cuts(
            model, orbit, n_seeds=args.seeds, eps=args.eps, cut_cfg=cut_cfg,
            map_fn=_map_fn(args.workers))
        cands = intersect_cuts(cu, cs)
        nu = "fig7_h%s_unstable.csv" % h
        ns = "fig7_h%s_stable.csv" % h
        _cut_to_csv(cu, cu.branch, os.path.join(outdir, nu))
        _cut_to_csv(cs, cs.branch, os.path.join(outdir, ns))
        files += [nu, ns]
        summary.append({"energy": h, "candidates": len(cands),
                        "points": [list(c.point) for c in cands],
                        "unstable_closed": cu.closed,
                        "stable_closed": cs.closed})
    _write_json(os.path.join(outdir, "fig7_census.json"), summary)
    return {"census": summary}, files + ["fig7_census.json"]


def _interior_grid(model, cut_u, cut_s, n=41):
    """theta1-symmetric grid inside both cut polygons, lifted to states."""
    cu, cs = cut_u.coords, cut_s.coords
    lo = np.maximum(cu.min(axis=0), cs.min(axis=0))
    hi = np.minimum(cu.max(axis=0), cs.max(axis=0))
    a = max(abs(lo[0]), abs(hi[0]))
    g1 = np.linspace(-a, a, n)
    g2 = np.linspace(lo[1], hi[1], n)
    pts = np.array([(x, y) for x in g1 for y in g2])
    keep = polygon_contains(cu, pts) & polygon_contains(cs, pts)
    pts = pts[keep]
    near = float(np.median(cut_u.full_states[:, 3]))
    states = []
    for p in pts:
        try:
            states.append(section_state_at_energy(
                model, cut_u.section, p, cut_u.energy,
                branch=+1, near=near))
        except SaddleTubesError:
            continue
    return np.array(states)


def _fig8(model, model_cfg, outdir, args, energy=-0.06985):
    """Interior iterates of the section map inside the Down-Up tubes."""
    cut_cfg = _integrator_config({}, rel=1e-10)
    saddle = equilibrium_by_label(model, "DownUp")
    orbit = upo_at_energy(model, saddle, energy)
    target = orbit.shifted(np.array([0.0, TWO_PI, 0.0, 0.0]))
    section = SectionSpec.angle(
        1, TWO_PI * round((orbit.anchor[1] + math.pi) / TWO_PI))
    bu = seed_tube(model, orbit, UNSTABLE, sign=+1, eps=args.eps,
                   n_seeds=args.seeds, cfg=cut_cfg)
    bs = seed_tube(model, target, STABLE, sign=+1, eps=args.eps,
                   n_seeds=args.seeds, cfg=cut_cfg)
    cu = globalize_tube(model, bu, section, crossing_direction=+1,
                        cfg=cut_cfg, map_fn=_map_fn(args.workers))
    cs = globalize_tube(model, bs, section, crossing_direction=+1,
                        cfg=cut_cfg, map_fn=_map_fn(args.workers))
    files = ["fig8_unstable.csv", "fig8_stable.csv"]
    _cut_to_csv(cu, bu, os.path.join(outdir, files[0]))
    _cut_to_csv(cs, bs, os.path.join(outdir, files[1]))

    pts = _interior_grid(model, cu, cs)
    fw = interior_iterate(model, pts, cu.section.with_direction(+1), 3,
                          tdir=+1)
    bw = interior_iterate(model, pts, cu.section.with_direction(-1), 3,
                          tdir=-1)
    doc = {"energy": energy, "n_interior": len(pts),
           "candidates": [list(c.point) for c in intersect_cuts(cu, cs)],
           "returns": []}
    for k, (cf, cb) in enumerate(zip(fw, bw), start=1):
        nf = "fig8_return%d_forward.csv" % k
        nb = "fig8_return%d_backward.csv" % k
        for cut, name in ((cf, nf), (cb, nb)):
            with open(os.path.join(outdir, name), "w") as fh:
                fh.write("c1,c2\n")
                for c in cut.coords:
                    fh.write("%s,%s\n" % (_fmt(c[0]), _fmt(c[1])))
        files += [nf, nb]
        inside = polygon_contains(cu.coords, cf.coords)
        doc["returns"].append({
            "k": k, "theta2_level": section.value + TWO_PI * k,
            "forward_points": len(cf), "backward_points": len(cb),
            "inside_unstable_fraction":
                float(np.count_nonzero(inside)) / max(len(cf), 1)})
    _write_json(os.path.join(outdir, "fig8_summary.json"), doc)
    return {"summary": doc}, files + ["fig8_summary.json"]


def _fig9(model, model_cfg, outdir, args, energy=0.2):
    """Up-Down tube cuts on theta1 = 2*pi k at H = 0.2, both senses (the
    counterclockwise pair is the reverser image of the clockwise one)."""
    cut_cfg = _integrator_config({}, rel=1e-10)
    saddle = equilibrium_by_label(model, "UpDown")
    orbit = upo_at_energy(model, saddle, energy)
    target = orbit.shifted(np.array([TWO_PI, 0.0, 0.0, 0.0]))
    section = SectionSpec.angle(
        0, TWO_PI * round((orbit.anchor[0] + math.pi) / TWO_PI))
    bu = seed_tube(model, orbit, UNSTABLE, sign=+1, eps=args.eps,
                   n_seeds=args.seeds, cfg=cut_cfg)
    bs = seed_tube(model, target, STABLE, sign=+1, eps=args.eps,
                   n_seeds=args.seeds, cfg=cut_cfg)
    cu = globalize_tube(model, bu, section, crossing_direction=+1,
                        cfg=cut_cfg, map_fn=_map_fn(args.workers))
    cs = globalize_tube(model, bs, section, crossing_direction=+1,
                        cfg=cut_cfg, map_fn=_map_fn(args.workers))
    files = ["fig9_unstable_cw.csv", "fig9_stable_cw.csv"]
    _cut_to_csv(cu, bu, os.path.join(outdir, files[0]))
    _cut_to_csv(cs, bs, os.path.join(outdir, files[1]))
    # reverser images: (q, v) -> (q, -v) swaps the rotation sense and the
    # roles of the stable/unstable families
    R = model.reversal_matrix
    for src, name in ((cs, "fig9_unstable_ccw.csv"),
                      (cu, "fig9_stable_ccw.csv")):
        with open(os.path.join(outdir, name), "w") as fh:
            fh.write("phase,c1,c2,q1,q2,v1,v2,flight_time,complete\n")
            for i in range(len(src)):
                st = R @ src.full_states[i]
                row = ([_fmt(src.phases[i])]
                       + [_fmt(c) for c in src.section.plane_coords(st)]
                       + [_fmt(c) for c in st]
                       + [_fmt(-src.flight_times[i]), "1"])
                fh.write(",".join(row) + "\n")
        files.append(name)
    doc = {"energy": energy, "candidates":
           [list(c.point) for c in intersect_cuts(cu, cs)],
           "unstable_closed": cu.closed, "stable_closed": cs.closed}
    _write_json(os.path.join(outdir, "fig9_summary.json"), doc)
    return {"summary": doc}, files + ["fig9_summary.json"]


def _fig11(model, model_cfg, outdir, args, energy=0.2):
    """The two Down-Up -> Up-Down heteroclinic orbits at H = 0.2."""
    cut_cfg = _integrator_config({}, rel=1e-10)
    hets = heteroclinics_between_saddles(
        model, equilibrium_by_label(model, "DownUp"),
        equilibrium_by_label(model, "UpDown"), energy,
        n_seeds=args.seeds, eps=args.eps, cut_cfg=cut_cfg)
    cfg = {"model": model_cfg, "energy": energy, "seeds": args.seeds,
           "eps": args.eps}
    records = _emit_connections(model, hets, outdir, "fig11_het", cfg)
    files = ["fig11_het.json"]
    for lab, orbit in (("DownUp", hets[0].source_upo if hets else None),
                       ("UpDown", hets[0].target_upo if hets else None)):
        if orbit is None:
            continue
        times, states = sample_orbit(model, orbit, 400)
        name = "fig11_upo_%s.csv" % lab
        trajectory_to_csv(SampledPath(times=times, states=states), model,
                          os.path.join(outdir, name))
        files.append(name)
    return {"heteroclinics": records}, files


def _fig12(model, model_cfg, outdir, args):
    """The three connection graphs: Down-Up homoclinics at H = -0.07;
    the H = 0.2 heteroclinic pair with reversed counterparts; and the
    combined H = 0.2 graph with both families' homoclinics."""
    cut_cfg = _integrator_config({}, rel=1e-10)
    files = []
    doc = {}

    du = equilibrium_by_label(model, "DownUp")
    ud = equilibrium_by_label(model, "UpDown")

    # (a) single vertex, the four homoclinic loops
    orbit_a = upo_at_energy(model, du, -0.07)
    homs_a = find_homoclinics(model, orbit_a, n_seeds=args.seeds,
                              eps=args.eps, cut_cfg=cut_cfg)
    graph_a = build_graph([orbit_a], homs_a)
    cfg_a = {"model": model_cfg, "energy": -0.07, "saddles": ["DownUp"]}
    path_a, doc_a = _write_graph(model, model_cfg, graph_a, outdir,
                                 "fig12a_graph", cfg_a)
    doc["a"] = {"n_vertices": len(doc_a["vertices"]),
                "n_edges": len(doc_a["edges"])}

    # (b) two vertices, the heteroclinic pairs both ways
    upo_du = upo_at_energy(model, du, 0.2)
    upo_ud = upo_at_energy(model, ud, 0.2)
    hets = heteroclinics_between_saddles(model, du, ud, 0.2,
                                         n_seeds=args.seeds, eps=args.eps,
                                         cut_cfg=cut_cfg)
    rev = [reverse_connection(model, h) for h in hets]
    verts_b = [upo_du, upo_ud] + [h.target_upo for h in hets] \
        + [r.target_upo for r in rev]
    graph_b = build_graph(verts_b, hets + rev)
    cfg_b = {"model": model_cfg, "energy": 0.2,
             "saddles": ["DownUp", "UpDown"], "heteroclinics": True}
    path_b, doc_b = _write_graph(model, model_cfg, graph_b, outdir,
                                 "fig12b_graph", cfg_b)
    doc["b"] = {"n_vertices": len(doc_b["vertices"]),
                "n_edges": len(doc_b["edges"])}

    # (c) everything at H = 0.2 together
    homs_du = find_homoclinics(model, upo_du, n_seeds=args.seeds,
                               eps=args.eps, cut_cfg=cut_cfg)
    homs_ud = find_homoclinics(model, upo_ud, n_seeds=args.seeds,
                               eps=args.eps, cut_cfg=cut_cfg)
    graph_c = build_graph(verts_b, homs_du + homs_ud + hets + rev)
    cfg_c = {"model": model_cfg, "energy": 0.2,
             "saddles": ["DownUp", "UpDown"], "heteroclinics": True,
             "homoclinics": True}
    path_c, doc_c = _write_graph(model, model_cfg, graph_c, outdir,
                                 "fig12c_graph", cfg_c)
    doc["c"] = {"n_vertices": len(doc_c["vertices"]),
                "n_edges": len(doc_c["edges"])}
    files += [os.path.basename(p) for p in (path_a, path_b, path_c)]
    _write_json(os.path.join(outdir, "fig12_counts.json"), doc)
    return {"graphs": doc}, files + ["fig12_counts.json"]


def _fig13(model, model_cfg, outdir, args, energy=-0.07):
    """Shadowing datasets: base symmetric homoclinic, the k = 1 periodic
    shadow, and a k = 2 doubly-homoclinic shadow."""
    cut_cfg = _integrator_config({}, rel=1e-10)
    orbit = upo_at_energy(model, equilibrium_by_label(model, "DownUp"),
                          energy)
    homs = find_homoclinics(model, orbit, n_seeds=args.seeds, eps=args.eps,
                            cut_cfg=cut_cfg)
    sym = [c for c in homs if c.symmetric]
    if not sym:
        raise SaddleTubesError("no symmetric homoclinic found at H=%g"
                               % energy)
    base = sym[0]
    graph = build_graph([orbit], homs)
    e_base = next(i for i, e in enumerate(graph.edges)
                  if e.connection is base)
    files = ["fig13_base_hom.csv"]
    trajectory_to_csv(base.trajectory, model,
                      os.path.join(outdir, files[0]))

    walk1 = Walk(edges=(e_base,), vertices=(0, 0), closed=True)
    shadow1 = construct_shadow_orbit(
        model, ShadowSpec(graph=graph, walk=walk1, wraps=(4,),
                          kind="periodic"))
    walk2 = Walk(edges=(e_base, e_base), vertices=(0, 0, 0), closed=True)
    shadow2 = construct_shadow_orbit(
        model, ShadowSpec(graph=graph, walk=walk2, wraps=(4,),
                          kind="connecting"))
    doc = {"energy": energy, "base_point": list(base.point),
           "edge": "e%d" % e_base, "shadows": []}
    for tag, sh in (("periodic_k1", shadow1), ("double_hom_k2", shadow2)):
        name = "fig13_%s.csv" % tag
        trajectory_to_csv(SampledPath(times=sh.times, states=sh.states),
                          model, os.path.join(outdir, name))
        files.append(name)
        doc["shadows"].append({
            "tag": tag, "csv": name, "residual": sh.residual,
            "closure_residual": sh.closure_residual,
            "dwell_counts": list(sh.dwell_counts),
            "rotation_offset": list(sh.rotation_offset),
            "total_time": sh.total_time})
    _write_json(os.path.join(outdir, "fig13_summary.json"), doc)
    return {"summary": doc}, files + ["fig13_summary.json"]


_FIGURES = {"fig6": _fig6, "fig7": _fig7, "fig8": _fig8, "fig9": _fig9,
            "fig11": _fig11, "fig12": _fig12, "fig13": _fig13}


def reproduce_figure(figure_id, args):
    run_cfg = _load_run_config(args.config)
    if getattr(args, "system", None) is None:
        args.system = "physical_dp"
    model, model_cfg = _resolve_model(args, run_cfg)
    outdir = _figure_outdir(args, run_cfg, figure_id)
    summary, files = _FIGURES[figure_id](model, model_cfg, outdir, args)
    cfg = {"figure": figure_id, "model": model_cfg, "seeds": args.seeds,
           "eps": args.eps}
    _write_manifest(outdir, figure_id, cfg, files=files)
    _print_json({"figure": figure_id, "outdir": outdir, "summary": summary})
    return 0


def cmd_figure(args):
    return reproduce_figure(args.figure_id, args)


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(
        prog="saddletubes",
        description="saddle-mediated transport structures for 2-DOF "
                    "Hamiltonian systems")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, system=True):
        sp.add_argument("--config", help="run-config JSON file")
        sp.add_argument("--out", help="output directory (TUBE_OUT overrides)")
        if system:
            sp.add_argument("--system",
                            help="builtin kind (%s) or model-JSON path"
                            % "/".join(_SYSTEM_KINDS))

    sp = sub.add_parser("equilibria", help="equilibrium table as JSON")
    common(sp)
    sp.set_defaults(func=cmd_equilibria)

    sp = sub.add_parser("pcr3bp-points",
                        help="collinear Lagrange point abscissae")
    sp.add_argument("--mu", type=float, required=True)
    sp.set_defaults(func=cmd_pcr3bp_points)

    sp = sub.add_parser("hills", help="Hill's region grid CSV")
    common(sp)
    sp.add_argument("--energy", type=float, required=True)
    sp.add_argument("--resolution", type=int, default=400)
    sp.add_argument("--bounds", help="q1min,q1max,q2min,q2max")
    sp.set_defaults(func=cmd_hills)

    sp = sub.add_parser("upo", help="symmetric UPO at one energy")
    common(sp)
    sp.add_argument("--saddle", required=True)
    sp.add_argument("--energy", type=float, required=True)
    sp.add_argument("--samples", type=int, default=400)
    sp.set_defaults(func=cmd_upo)

    sp = sub.add_parser("tube", help="manifold cut on a Poincare section")
    common(sp)
    sp.add_argument("--saddle", required=True)
    sp.add_argument("--energy", type=float, required=True)
    sp.add_argument("--stability", choices=("unstable", "stable"),
                    default="unstable")
    sp.add_argument("--sign", type=int, choices=(-1, 1), default=1)
    sp.add_argument("--eps", type=float, default=1e-6)
    sp.add_argument("--seeds", type=int, default=200)
    sp.add_argument("--section", help="section config JSON text")
    sp.add_argument("--direction", type=int, choices=(-1, 1), default=None)
    sp.add_argument("--rel-tol", type=float, default=1e-10)
    sp.add_argument("--workers", type=int, default=os.cpu_count())
    sp.set_defaults(func=cmd_tube)

    sp = sub.add_parser("connections",
                        help="refined homoclinic/heteroclinic orbits")
    common(sp)
    sp.add_argument("--energy", type=float, required=True)
    sp.add_argument("--type", choices=("hom", "het"), required=True)
    sp.add_argument("--src")
    sp.add_argument("--dst")
    sp.add_argument("--seeds", type=int, default=160)
    sp.add_argument("--eps", type=float, default=1e-5)
    sp.add_argument("--lift-turns", type=int, default=1)
    sp.add_argument("--rel-tol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_connections)

    sp = sub.add_parser("graph", help="connection graph JSON + edge CSVs")
    common(sp)
    sp.add_argument("--energy", type=float, required=True)
    sp.add_argument("--saddles", default="DownUp",
                    help="comma-separated saddle labels")
    sp.add_argument("--heteroclinics", action="store_true",
                    help="include heteroclinics between the first two "
                         "saddles (plus reverser images)")
    sp.add_argument("--seeds", type=int, default=160)
    sp.add_argument("--eps", type=float, default=1e-5)
    sp.add_argument("--rel-tol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_graph)

    sp = sub.add_parser("shadow",
                        help="multiple-shooting shadow of a graph walk")
    common(sp, system=False)
    sp.add_argument("--graph", required=True, help="graph JSON file")
    sp.add_argument("--walk", required=True, help='e.g. "e3,e1,e1"')
    sp.add_argument("--wraps", required=True, help='e.g. "4,4,6"')
    sp.add_argument("--kind", choices=("periodic", "connecting"),
                    default="periodic")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.set_defaults(func=cmd_shadow)

    sp = sub.add_parser("figure", help="reproduce a survey-figure dataset")
    common(sp)
    sp.add_argument("figure_id", choices=FIGURE_IDS)
    sp.add_argument("--seeds", type=int, default=160)
    sp.add_argument("--eps", type=float, default=1e-5)
    sp.add_argument("--workers", type=int, default=os.cpu_count())
    sp.set_defaults(func=cmd_figure)

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SaddleTubesError as err:
        json.dump({"error": type(err).__name__, "message": str(err)},
                  sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 3
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as err:
        sys.stderr.write("error: %s\n" % err)
        return 2


if __name__ == "__main__":
    sys.exit(main())
