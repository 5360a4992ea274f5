"""gripforge command line: simulate, ingest, profile, somqe, compare.

Exit codes: 0 success, 1 usage error, 2 data error.  Every subcommand is
deterministic given identical inputs and seeds.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import acquisition, profiling, simulate, som, stats, svgplot
from .acquisition import HAND_CODES, Session, SessionFormatError, read_session, write_session
from .sensors import ELIGIBLE_SENSORS

_FLOAT_FMT = "%.6f"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise _UsageError(message)


def _session_id(s: Session) -> str:
    return f"{s.user}:{HAND_CODES[s.hand]}:{s.session_index}"


def _group_id(s: Session) -> str:
    return f"{s.user}:{HAND_CODES[s.hand]}"


def _parse_sensors(spec: str | None) -> tuple[int, ...]:
    if not spec:
        return ELIGIBLE_SENSORS
    out = []
    for token in spec.split(","):
        token = token.strip().upper().lstrip("S")
        if not token.isdigit() or not 1 <= int(token) <= 12:
            raise _UsageError(f"bad sensor {token!r} in --sensors (use S1..S12)")
        out.append(int(token))
    return tuple(out)


def _load_sessions(paths: list[str]) -> list[Session]:
    files: list[Path] = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            files += sorted(
                f for f in path.glob("*.csv")
                if f.read_text(encoding="utf-8").startswith("# gripforge-session")
            )
        else:
            files.append(path)
    if not files:
        raise SessionFormatError(f"no session files found under {paths}")
    sessions = [read_session(f) for f in files]
    sessions.sort(key=lambda s: (s.user, s.hand, s.session_index))
    return sessions


def _resolve_profile(arg: str | None, name: str) -> simulate.SkillProfile:
    if arg:
        return simulate.load_profile(arg)
    profile_dir = os.environ.get("GRIPFORGE_PROFILE_DIR")
    if profile_dir:
        candidate = Path(profile_dir) / f"{name}.profile"
        if candidate.exists():
            return simulate.load_profile(candidate)
    return (
        simulate.DEFAULT_EXPERT_PROFILE if name == "expert" else simulate.DEFAULT_NOVICE_PROFILE
    )


def _cmd_simulate(args) -> int:
    expert = _resolve_profile(args.expert_profile, "expert")
    novice = _resolve_profile(args.novice_profile, "novice")
    config = simulate.GeneratorConfig(
        seed=args.seed,
        sessions=args.sessions,
        nondominant_std_growth=args.std_growth,
        incident_amplitude_mv=args.incident_amplitude,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sessions = simulate.simulate_cohort(expert, novice, config)
    manifest = [f"# gripforge-manifest v1 seed={config.seed} sessions={config.sessions}"]
    for s in sessions:
        fname = f"{s.user}_{HAND_CODES[s.hand]}_s{s.session_index:02d}.csv"
        write_session(out / fname, s)
        manifest.append(f"{fname},{s.user},{HAND_CODES[s.hand]},{s.session_index}")
    (out / "manifest.txt").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    simulate.save_profile(out / "expert.profile", expert)
    simulate.save_profile(out / "novice.profile", novice)
    print(f"wrote {len(sessions)} sessions to {out}")
    return 0


def _cmd_ingest(args) -> int:
    decoder = acquisition.StreamDecoder()
    frames = decoder.feed(Path(args.raw).read_bytes())
    session = acquisition.stream_to_session(
        frames, user=args.user, hand=acquisition.HAND_NAMES[args.hand], session_index=args.index
    )
    write_session(args.out, session)
    print(
        f"decoded {len(frames)} frames ({decoder.corrupt_frames} corrupt, "
        f"{decoder.skipped_bytes} bytes skipped, {decoder.pending_bytes} pending) -> {args.out}"
    )
    return 0


def _amv_rows(sessions, sensors, window_ms, include_gaps):
    for s in sessions:
        for k in sensors:
            prof = profiling.window_amv(profiling.sensor_series(s, k), window_ms)
            for start, amv, flagged in zip(prof.start_ms, prof.amv_mv, prof.flagged):
                if flagged and not include_gaps:
                    continue
                yield s, k, int(start), float(amv)


def _cmd_profile(args) -> int:
    sensors = _parse_sensors(args.sensors)
    sessions = _load_sessions(args.sessions)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    amv_lines = ["session,sensor,window_start_ms,amv_mv"]
    for s, k, start, amv in _amv_rows(sessions, sensors, args.window_ms, args.include_gap_windows):
        amv_lines.append(f"{_session_id(s)},S{k},{start},{_FLOAT_FMT % amv}")
    (out / "amv.csv").write_text("\n".join(amv_lines) + "\n", encoding="utf-8")

    std_lines = ["session,sensor,std_mv"]
    by_group: dict[str, list[Session]] = {}
    for s in sessions:
        by_group.setdefault(_group_id(s), []).append(s)
    for group in sorted(by_group):
        for point in profiling.variability_curve(by_group[group], sensors, mode=args.mode):
            std_lines.append(
                f"{group}:{point.session_index},{point.sensor},{_FLOAT_FMT % point.std_mv}"
            )
    (out / "std.csv").write_text("\n".join(std_lines) + "\n", encoding="utf-8")

    if args.plot:
        _plot_profile(out, sessions, sensors, by_group, args.window_ms)
    print(f"wrote {out / 'amv.csv'} and {out / 'std.csv'}")
    return 0


def _plot_profile(out, sessions, sensors, by_group, window_ms) -> None:
    curves = []
    for group in sorted(by_group):
        points = profiling.variability_curve(by_group[group], sensors, mode="pooled")
        curves.append(
            (group, [p.session_index for p in points], [p.std_mv for p in points])
        )
    svgplot.write_svg(
        out / "std_curve.svg",
        svgplot.line_chart(
            curves, title="Grip-force variability per session",
            x_label="session", y_label="STD (mV)",
        ),
    )
    for s in sessions:
        indices = [x.session_index for x in sessions if x.user == s.user and x.hand == s.hand]
        if s.hand != "dominant" or s.session_index not in (min(indices), max(indices)):
            continue
        spans = _step_spans(s)
        for k in sensors:
            prof = profiling.window_amv(profiling.sensor_series(s, k), window_ms)
            starts, amv = prof.clean()
            name = f"amv_{s.user}_S{k}_s{s.session_index:02d}.svg"
            svgplot.write_svg(
                out / name,
                svgplot.line_chart(
                    [(f"S{k}", [float(t) / 1000 for t in starts], list(map(float, amv)))],
                    title=f"{s.user} session {s.session_index}, S{k} window averages",
                    x_label="time (s)", y_label="AmV (mV)", spans=spans,
                ),
            )


def _step_spans(session: Session) -> list[tuple[float, float, str]]:
    steps = sorted((t, e) for t, e in session.annotations if e.startswith("step"))
    spans = []
    for i, (t, event) in enumerate(steps):
        t_next = steps[i + 1][0] if i + 1 < len(steps) else session.end_ms
        spans.append((t / 1000.0, t_next / 1000.0, event))
    return spans


def _qe_schedule(args) -> som.TrainingSchedule:
    return som.TrainingSchedule(
        epochs=args.epochs, alpha0=args.alpha0, sigma0=args.sigma0, seed=args.seed
    )


def _cmd_somqe(args) -> int:
    sessions = _load_sessions(args.sessions)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    groups: dict[str, list[Session]] = {}
    for s in sessions:
        groups.setdefault(_group_id(s), []).append(s)
    schedule = _qe_schedule(args)

    if args.grid_in:
        grid, _ = som.load_grid(args.grid_in)
        points = [
            som.QePoint(g, s.session_index, som.quantization_error(grid, som.build_inputs(s)[0]))
            for g in sorted(groups)
            for s in sorted(groups[g], key=lambda s: s.session_index)
        ]
        som.save_grid(out / "grid.txt", grid, schedule)
    else:
        points, trained = som.som_qe_curve(
            groups, schedule, mode=args.mode, max_train_inputs=args.max_train_inputs
        )
        if args.mode == "pooled":
            som.save_grid(out / "grid.txt", trained, schedule)
        else:
            for label, grid in trained.items():
                som.save_grid(out / f"grid_{label.replace(':', '_')}.txt", grid, schedule)

    lines = ["group,session,qe_mv"]
    lines += [f"{p.group},{p.session_index},{_FLOAT_FMT % p.qe_mv}" for p in points]
    (out / "qe.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    if args.plot:
        curves = []
        for label in sorted(groups):
            pts = [p for p in points if p.group == label]
            curves.append(
                (label, [p.session_index for p in pts], [p.qe_mv for p in pts])
            )
        svgplot.write_svg(
            out / "qe_curve.svg",
            svgplot.line_chart(
                curves, title="SOM quantization error per session",
                x_label="session", y_label="QE (mV)",
            ),
        )
    print(f"wrote {out / 'qe.csv'}")
    return 0


def _read_qe_csv(path: str) -> list[som.QePoint]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "group,session,qe_mv":
        raise ValueError(f"{path}: not a gripforge QE CSV")
    return [
        som.QePoint(g, int(i), float(q))
        for g, i, q in (line.split(",") for line in lines[1:] if line.strip())
    ]


def _cmd_compare(args) -> int:
    sessions = _load_sessions(args.sessions)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    users = sorted({s.user for s in sessions})
    if len(users) != 2:
        raise ValueError(f"compare needs exactly two users, found {users}")
    ua, ub = users

    if args.qe:
        qe_points = _read_qe_csv(args.qe)
    else:
        groups: dict[str, list[Session]] = {}
        for s in sessions:
            groups.setdefault(_group_id(s), []).append(s)
        qe_points, _ = som.som_qe_curve(groups, som.TrainingSchedule(seed=args.seed))

    rows: list[tuple] = []  # (analysis, effect, stat, df1, df2, p, detail)
    text = ["gripforge compare report", "========================", ""]

    for hand in ("d", "n"):
        hand_name = acquisition.HAND_NAMES[hand]
        series = {}
        for user in users:
            sel = [s for s in sessions if s.user == user and s.hand == hand_name]
            if sel:
                series[user] = [
                    p.std_mv for p in profiling.variability_curve(sel, mode="pooled")
                ]
        if len(series) == 2 and all(len(v) >= 2 for v in series.values()):
            r = stats.two_group_t(series[ua], series[ub])
            rows.append(("std_t", f"{ua}_vs_{ub}_{hand}", r.t, r.df, "", r.p,
                         f"means {r.mean_a:.2f} vs {r.mean_b:.2f}"))
            text.append(
                f"Pooled per-session STD, {hand_name} hand, {ua} vs {ub}: "
                f"t({r.df}) = {r.t:.3f}, {stats.p_label(r.p)} "
                f"(means {r.mean_a:.2f} vs {r.mean_b:.2f} mV)"
            )
        qe_series = {
            user: [p.qe_mv for p in qe_points if p.group == f"{user}:{hand}"]
            for user in users
        }
        if all(len(v) >= 2 for v in qe_series.values()):
            r = stats.two_group_t(qe_series[ua], qe_series[ub])
            rows.append(("qe_t", f"{ua}_vs_{ub}_{hand}", r.t, r.df, "", r.p,
                         f"means {r.mean_a:.2f} vs {r.mean_b:.2f}"))
            text.append(
                f"SOM-QE, {hand_name} hand, {ua} vs {ub}: "
                f"t({r.df}) = {r.t:.3f}, {stats.p_label(r.p)} "
                f"(means {r.mean_a:.2f} vs {r.mean_b:.2f} mV)"
            )
    text.append("")

    for k in (5, 6, 7):
        cells, n_cell = _anova_cells(sessions, users, k, args.window_ms)
        if n_cell < 2:
            text.append(f"ANOVA S{k}: skipped (fewer than 2 windows per cell)")
            continue
        r = stats.anova_2x2(cells)
        text.append(
            f"ANOVA S{k} (AmV windows, dominant hand, first vs last session, "
            f"n/cell={r.n_per_cell}):"
        )
        for effect, f, p in (
            ("expertise", r.f_a, r.p_a),
            ("session", r.f_b, r.p_b),
            ("expertise x session", r.f_ab, r.p_ab),
        ):
            text.append(f"  {effect:<22} F(1,{r.df_error}) = {f:.2f}, {stats.p_label(p)}")
            rows.append((f"anova_S{k}", effect.replace(" ", "_"), f, 1, r.df_error, p,
                         f"n_per_cell={r.n_per_cell}"))
    report_text = "\n".join(text) + "\n"
    (out / "report.txt").write_text(report_text, encoding="utf-8")
    csv_lines = ["analysis,effect,statistic,df1,df2,p,detail"]
    csv_lines += [
        f"{a},{e},{_FLOAT_FMT % v},{d1},{d2},{p:.6g},{detail}"
        for a, e, v, d1, d2, p, detail in rows
    ]
    (out / "report.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    sys.stdout.write(report_text)
    return 0


def _anova_cells(sessions, users, sensor, window_ms):
    """2x2 AmV cells (user x first/last dominant session), truncated to balance."""
    cells = [[None, None], [None, None]]
    for i, user in enumerate(users):
        dom = sorted(
            (s for s in sessions if s.user == user and s.hand == "dominant"),
            key=lambda s: s.session_index,
        )
        if not dom:
            return cells, 0
        for j, session in enumerate((dom[0], dom[-1])):
            prof = profiling.window_amv(profiling.sensor_series(session, sensor), window_ms)
            cells[i][j] = prof.clean()[1].tolist()
    n_cell = min(len(cells[i][j]) for i in range(2) for j in range(2))
    cells = [[cells[i][j][:n_cell] for j in range(2)] for i in range(2)]
    return cells, n_cell


def _build_parser() -> _Parser:
    parser = _Parser(prog="gripforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic expert/novice cohort")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sessions", type=int, default=10)
    p.add_argument("--expert-profile", help="profile file (default: bundled expert)")
    p.add_argument("--novice-profile", help="profile file (default: bundled novice)")
    p.add_argument("--std-growth", type=float, default=0.5,
                   help="non-dominant-hand sigma growth by the last session")
    p.add_argument("--incident-amplitude", type=float, default=0.0,
                   help="mV perturbation around incidents")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ingest", help="decode a raw frame stream into a session file")
    p.add_argument("--raw", required=True, help="raw byte stream file")
    p.add_argument("--user", required=True)
    p.add_argument("--hand", required=True, choices=["d", "n"])
    p.add_argument("--index", required=True, type=int)
    p.add_argument("--out", required=True, help="session CSV to write")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("profile", help="windowed AmV and per-session STD")
    p.add_argument("sessions", nargs="+", help="session files or directories")
    p.add_argument("--out", required=True)
    p.add_argument("--sensors", help="comma list, e.g. S5,S6,S7 (default: eligible ten)")
    p.add_argument("--window-ms", type=int, default=profiling.WINDOW_MS_DEFAULT)
    p.add_argument("--mode", choices=["pooled", "per-sensor"], default="pooled")
    p.add_argument("--include-gap-windows", action="store_true")
    p.add_argument("--plot", action="store_true", help="emit SVG charts")
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("somqe", help="train the 7x7 map and score per-session QE")
    p.add_argument("sessions", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--alpha0", type=float, default=0.5)
    p.add_argument("--sigma0", type=float, default=3.5)
    p.add_argument("--mode", choices=["pooled", "per-group"], default="pooled")
    p.add_argument("--max-train-inputs", type=int, default=5000)
    p.add_argument("--grid-in", help="reuse a saved grid snapshot instead of training")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=_cmd_somqe)

    p = sub.add_parser("compare", help="t tests on STD/QE series plus S5/S6/S7 ANOVA")
    p.add_argument("sessions", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--qe", help="qe.csv from somqe (computed here when omitted)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window-ms", type=int, default=profiling.WINDOW_MS_DEFAULT)
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"gripforge: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"gripforge: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, acquisition.FrameError) as exc:
        print(f"gripforge: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
