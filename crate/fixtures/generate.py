#!/usr/bin/env python3
"""Regenerates the synthetic fixtures in this directory.

Everything is derived from fixed seeds, so running the script twice produces
identical files. Only the standard library is used.
"""

import json
import math
import random
import shutil
from datetime import datetime, timedelta, timezone
from pathlib import Path

HERE = Path(__file__).resolve().parent
YEAR = 2024
UTC = timezone.utc


def ts(t):
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


def nf_ts(t):
    return t.strftime("%Y-%m-%d %H:%M:%S.") + f"{t.microsecond // 1000:03d}"


def year_steps(step_s):
    t = datetime(YEAR, 1, 1, tzinfo=UTC)
    end = datetime(YEAR + 1, 1, 1, tzinfo=UTC)
    while t < end:
        yield t
        t += timedelta(seconds=step_s)


def write_ci(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="\n") as f:
        f.write("timestamp_utc,ci_g_per_kwh\n")
        for t, v in rows:
            f.write(f"{ts(t)},{max(v, 0.0):.2f}\n")


def ar1(rng, n, rho, sigma):
    x, out = 0.0, []
    for _ in range(n):
        x = rho * x + rng.gauss(0.0, sigma)
        out.append(x)
    return out


def local_hour(t, offset_h):
    return ((t.hour + t.minute / 60.0 + offset_h) % 24.0)


def season(t):
    """+1 in midwinter, -1 in midsummer (northern hemisphere)."""
    day = t.timetuple().tm_yday
    return math.cos(2.0 * math.pi * (day - 15) / 366.0)


def gb(t, noise):
    h = local_hour(t, 0)
    evening = math.exp(-((h - 18.0) ** 2) / 8.0)
    night = -math.exp(-((h - 3.5) ** 2) / 6.0)
    return 185.0 + 55.0 * season(t) + 45.0 * evening + 30.0 * night + noise


def de(t, noise):
    h = local_hour(t, 1)
    solar = -math.exp(-((h - 13.0) ** 2) / 10.0) * (1.0 - 0.5 * season(t))
    return 380.0 + 60.0 * season(t) + 90.0 * solar + noise


def caiso(t, noise):
    # duck curve: evening ramp, deep solar trough from late morning
    h = local_hour(t, -8)
    depth = 0.9 - 0.08 * season(t)
    trough = math.exp(-((h - 13.5) ** 2) / 9.0)
    ramp = math.exp(-((h - 19.5) ** 2) / 3.0)
    morning = math.exp(-((h - 8.5) ** 2) / 2.0)
    return 330.0 * (1.0 - depth * trough) + 60.0 * ramp + 60.0 * morning + noise


def ercot(t, noise):
    h = local_hour(t, -6)
    afternoon = math.exp(-((h - 16.0) ** 2) / 12.0)
    return 395.0 + 18.0 * afternoon - 10.0 * season(t) + noise


def gen_ci():
    out = HERE / "ci"
    hours = list(year_steps(3600))
    specs = [("GB", gb, 11, 18.0), ("DE", de, 12, 30.0), ("CAISO_NORTH", caiso, 13, 10.0), ("ERCOT", ercot, 14, 6.0)]
    for region, shape, seed, sigma in specs:
        rng = random.Random(seed)
        noise = ar1(rng, len(hours), 0.9, sigma)
        write_ci(out / f"{region}_average_{YEAR}.csv", [(t, shape(t, n)) for t, n in zip(hours, noise)])

    # marginal signal at 30-minute resolution: gas on the margin most of the time
    halves = list(year_steps(1800))
    for region, shape, seed in [("GB", gb, 21), ("DE", de, 22)]:
        rng = random.Random(seed)
        noise = ar1(rng, len(halves), 0.8, 25.0)
        rows = [(t, 1.9 * shape(t, 0.0) + 40.0 + n) for t, n in zip(halves, noise)]
        write_ci(out / f"{region}_marginal_{YEAR}.csv", rows)

    flat = HERE / "ci-flat"
    write_ci(flat / f"GB_average_{YEAR}.csv", [(t, 86.5) for t in hours])
    write_ci(flat / f"GB_marginal_{YEAR}.csv", [(t, 120.0) for t in hours])


CATALOG = json.loads((HERE.parent / "crates" / "core" / "data" / "catalog.json").read_text())
NODES = {n["node_id"]: n for n in CATALOG["nodes"]}
GIB = 1 << 30


def power_kw(node_id, cpus, util, mem_bytes, governor="performance"):
    n = NODES[node_id]
    c = n["governors"][governor]
    total = n["cpus_total"]
    cpu_w = c["p_idle_w"] * cpus / total + (c["p_max_w"] - c["p_idle_w"]) * (util / 100.0) / total
    return (cpu_w + c["mem_coeff_w_per_gb"] * mem_bytes / GIB) / 1000.0


def write_trace(path, workflow, nodes, region, tasks):
    """tasks: (process, start_offset_ms, duration_ms, util, cpus, mem_bytes, node)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    origin = datetime(YEAR, 3, 11, 9, 0, tzinfo=UTC)
    with path.open("w", newline="\n") as f:
        f.write(f"# workflow: {workflow}\n# nodes: {nodes}\n")
        if region:
            f.write(f"# region: {region}\n")
        f.write("task_id\tprocess\tsubmit\tstart\trealtime\t%cpu\tcpus\tmemory\tnode\n")
        for i, (proc, off, dur, util, cpus, mem, node) in enumerate(sorted(tasks, key=lambda x: (x[1], x[0])), 1):
            start = origin + timedelta(milliseconds=off)
            submit = start - timedelta(milliseconds=min(off, 1500))
            f.write(
                f"{i}\t{proc}\t{nf_ts(submit)}\t{nf_ts(start)}\t{dur}\t{util:.1f}%\t{cpus}\t{mem // (1 << 20)} MB\t{node}\n"
            )


def gen_nanoseq():
    # five sequential stages on one sherwood node, last stage sized so the
    # whole run draws 0.35 kWh under the performance governor
    stages = [
        ("NANOSEQ:FASTQC", 20 * 60_000, 350.0, 4, 6 * GIB),
        ("NANOSEQ:BWA_INDEX", 45 * 60_000, 100.0, 1, 8 * GIB),
        ("NANOSEQ:BWA_MEM", 100 * 60_000, 1450.0, 16, 24 * GIB),
        ("NANOSEQ:DEDUP", 40 * 60_000, 780.0, 8, 12 * GIB),
    ]
    tasks, off, energy = [], 0, 0.0
    for proc, dur, util, cpus, mem in stages:
        tasks.append((proc, off, dur, util, cpus, mem, "sherwood"))
        energy += power_kw("sherwood", cpus, util, mem) * dur / 3_600_000
        off += dur
    last = ("NANOSEQ:VARIANTS", 1180.0, 12, 16 * GIB)
    p = power_kw("sherwood", last[2], last[1], last[3])
    dur = round((0.35 - energy) / p * 3_600_000)
    tasks.append((last[0], off, dur, last[1], last[2], last[3], "sherwood"))
    write_trace(HERE / "traces" / "nanoseq_sherwood.tsv", "Nano-Seq", "sherwood x1", "GB", tasks)


def chipseq_tasks(seed, count):
    rng = random.Random(seed)
    procs = ["FASTQC", "TRIMGALORE", "BWA_MEM", "PICARD_MARKDUPLICATES", "MACS2_CALLPEAK", "DEEPTOOLS"]
    out = []
    for i in range(count):
        proc = procs[i * len(procs) // count]
        out.append((f"CHIPSEQ:{proc}", rng.randint(6, 38) * 60_000 + rng.randint(0, 59_999), rng.uniform(420.0, 800.0), 8, rng.randint(8, 30) * GIB))
    return out


def list_schedule(work, slots):
    """Greedy list scheduling in input order; returns (task, slot, start_ms)."""
    free = [0] * slots
    placed = []
    for w in work:
        s = min(range(slots), key=lambda k: (free[k], k))
        placed.append((w, s, free[s]))
        free[s] += w[1] + 2_000
    return placed


def gen_chipseq_atlantis():
    work = chipseq_tasks(5, 120)
    for n in (2, 4, 8):
        placed = list_schedule(work, n * 4)
        tasks = [(proc, start, dur, util, cpus, mem, "atlantis") for (proc, dur, util, cpus, mem), _, start in placed]
        write_trace(HERE / "traces" / f"chipseq_atlantis_x{n}.tsv", "Chip-Seq", f"atlantis x{n}", "DE", tasks)


def gen_chipseq_camelot():
    # whole-node tasks back to back on each of eight camelot nodes, so the
    # cluster draws nearly constant power for about 3.3 hours
    rng = random.Random(8)
    span = 198 * 60_000
    tasks = []
    procs = ["BWA_MEM", "SAMTOOLS_SORT", "PICARD_MARKDUPLICATES", "MACS2_CALLPEAK"]
    for node in range(8):
        cuts = sorted(rng.sample(range(20 * 60_000, span - 20 * 60_000, 60_000), 3))
        bounds = [0] + cuts + [span - node * 30_000]
        for k in range(4):
            start, end = bounds[k], bounds[k + 1]
            tasks.append((f"CHIPSEQ:{procs[k]}", start, end - start, rng.uniform(2700.0, 3100.0), 32, rng.randint(96, 200) * GIB, "camelot"))
    write_trace(HERE / "traces" / "chipseq_camelot_x8.tsv", "Chip-Seq", "camelot x8", None, tasks)


def gen_task_traces():
    # single-task runs per node; cpus follow each node's process config
    runs = {
        "bowtie2_build": {"olympus-1": (15 * 60_000, 790.0, 8), "elysium": (9 * 60_000, 780.0, 32), "sherwood": (21 * 60_000, 760.0, 8), "atlantis": (12 * 60_000, 770.0, 16)},
        "fastp": {"olympus-1": (6 * 60_000, 380.0, 4), "elysium": (4 * 60_000, 390.0, 16), "sherwood": (8 * 60_000, 370.0, 4), "atlantis": (5 * 60_000, 385.0, 8)},
    }
    for proc, per_node in runs.items():
        for node, (dur, util, cpus) in per_node.items():
            write_trace(HERE / "traces" / "tasks" / f"{proc}_{node}.tsv", proc, f"{node} x1", "GB", [(proc, 0, dur, util, cpus, 4 * GIB, node)])


def main():
    gen_ci()
    gen_nanoseq()
    gen_chipseq_atlantis()
    gen_chipseq_camelot()
    gen_task_traces()
    shutil.copyfile(HERE.parent / "crates" / "core" / "data" / "catalog.json", HERE / "catalog.json")


if __name__ == "__main__":
    main()
