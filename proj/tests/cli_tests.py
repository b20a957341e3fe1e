#!/usr/bin/env python3
"""End-to-end checks of the dclink command line: exit codes and file formats."""
import csv
import math
import os
import shutil
import subprocess
import sys
from pathlib import Path

exe, scenarios, out = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
shutil.rmtree(out, ignore_errors=True)
out.mkdir(parents=True)
failures = []


def dclink(*args, env=None):
    return subprocess.run([exe, *map(str, args)], capture_output=True, text=True, env=env)


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def read_summary(path):
    values = {}
    for line in path.read_text().splitlines():
        if line.startswith("#") or "=" not in line:
            continue
        k, v = (s.strip() for s in line.split("=", 1))
        values[k] = v
    return values


def floats(s):
    return [float(x) for x in s.split()]


# run: sharing schedule, summary recomputed from the CSV by this reader
r = dclink("run", scenarios / "sharing3.cfg", "--out", out / "sharing")
check(r.returncode == 0, f"run sharing3.cfg exits 0 ({r.stderr.strip()})")
with open(out / "sharing" / "timeseries.csv") as f:
    rows = list(csv.reader(f))
header, data = rows[0], [[float(x) for x in row] for row in rows[1:]]
check(header == ["t", "Vdc", "iload", "iL_1", "iL_2", "iL_3", "duty_1", "duty_2", "duty_3", "e1"], "timeseries header")
check(len(data) == 30000, "30000 samples at Ts = 2e-5 over 0.6 s")
summary = read_summary(out / "sharing" / "summary.txt")
expected = [(10, 4, 6), (4, 8, 8), (6, 4, 10)]
for seg in (1, 2, 3):
    t0, t1 = floats(summary[f"segment.{seg}.window"])
    window = [row for row in data if t0 <= row[0] < t1]
    for col, name in ((1, "Vdc_mean"), (2, "iload_mean")):
        mean = sum(row[col] for row in window) / len(window)
        check(abs(mean - float(summary[f"segment.{seg}.{name}"])) <= 1e-9 * abs(mean), f"segment {seg} {name} recomputed")
    iL = [sum(row[3 + k] for row in window) / len(window) for k in range(3)]
    reported = floats(summary[f"segment.{seg}.iL_mean"])
    check(all(abs(a - b) <= 1e-9 * abs(a) for a, b in zip(iL, reported)), f"segment {seg} iL means recomputed")
    check(all(abs(a - b) <= 0.2 for a, b in zip(iL, expected[seg - 1])), f"segment {seg} iL close to {expected[seg - 1]}")
meta = (out / "sharing" / "meta.txt").read_text()
check("seed = 1" in meta and "dclink_version" in meta and "[segment.3]" in meta, "meta echoes seed, version, config")

# run: droop scenario
r = dclink("run", scenarios / "droop.cfg", "--out", out / "droop")
check(r.returncode == 0, "run droop.cfg exits 0")
summary = read_summary(out / "droop" / "summary.txt")
check(abs(float(summary["segment.1.Vdc_mean"]) - 240.0) <= 4.8, "droop Vdc within 2% of 240 V")
check("segment.1.i_refs = 16" in (out / "droop" / "meta.txt").read_text(), "droop i_ref echoed")

# overrides and default output root
env = dict(os.environ, DCLINK_OUT=str(out / "envroot"))
r = dclink("run", scenarios / "droop.cfg", "--duration", "0.01", "--ts", "1e-5", "--seed", "9", env=env)
check(r.returncode == 0 and (out / "envroot" / "droop" / "timeseries.csv").exists(), "DCLINK_OUT default directory")
with open(out / "envroot" / "droop" / "timeseries.csv") as f:
    check(sum(1 for _ in f) == 1001, "--duration/--ts override sample count")
check("seed = 9" in (out / "envroot" / "droop" / "meta.txt").read_text(), "--seed override echoed")

# config errors -> exit 2 with line/field diagnostics
bad = out / "bad_gammas.cfg"
bad.write_text((scenarios / "sharing3.cfg").read_text().replace("gammas = 0.5, 0.2, 0.3", "gammas = 0.5, 0.2, 0.2"))
r = dclink("run", bad, "--out", out / "bad")
check(r.returncode == 2, "gammas not summing to 1 exit 2")
check("bad_gammas.cfg:" in r.stderr and "[segment.1] gammas" in r.stderr, f"diagnostic names line and field: {r.stderr.strip()}")
r = dclink("run", scenarios / "sharing3.cfg", "--set", "sim.colour=red", "--out", out / "bad")
check(r.returncode == 2 and "unknown key" in r.stderr, "unknown key exit 2")
r = dclink("run", out / "missing.cfg")
check(r.returncode == 2, "missing scenario exit 2")

# numerical failure -> exit 3: an unstable controller pole overflows its state
r = dclink("run", scenarios / "droop_centralized.cfg", "--out", out / "diverge",
           "--set", "controllers.type=custom", "--set", "controllers.Kv_num=1", "--set", "controllers.Kv_den=1, -5000",
           "--set", "controllers.Kr_num=0", "--set", "controllers.Kr_den=1")
check(r.returncode == 3 and "diverged" in r.stderr, f"unstable controller exit 3: {r.stderr.strip()}")

# cold-start boost begins from the precharged bus
r = dclink("run", scenarios / "droop_centralized.cfg", "--out", out / "boost", "--duration", "0.01",
           "--set", "converter.1.topology=boost", "--set", "converter.1.Vg=120")
with open(out / "boost" / "timeseries.csv") as f:
    first = next(csv.DictReader(f))
check(r.returncode == 0 and float(first["Vdc"]) == 120.0, "cold boost starts at Vg")

# verify
r = dclink("verify", "quick")
check(r.returncode == 0, "verify quick passes")
r = dclink("verify", "quick", "--inject-fault")
check(r.returncode == 1 and "FAIL" in r.stdout, "verify with injected fault exits 1")

# sweep
r = dclink("sweep", scenarios / "robustness.cfg", "--param", "network.busC", "--values", "400e-6,500e-6,600e-6",
           "--set", "sim.uncertainty=0", "--out", out / "sweep")
check(r.returncode == 0, f"sweep exits 0 ({r.stderr.strip()})")
with open(out / "sweep" / "sweep.csv") as f:
    rows = list(csv.DictReader(f))
check(len(rows) == 3 and all((out / "sweep" / f"run_00{i}" / "timeseries.csv").exists() for i in (1, 2, 3)),
      "sweep writes one directory per value")
check(all(float(row["ss_error_pct"]) < 1.0 for row in rows), "sweep busC ss_error < 1%")
r = dclink("sweep", scenarios / "robustness.cfg", "--param", "network.busC", "--out", out / "sweep_empty")
check(r.returncode == 2, "sweep with no values exits 2")
r = dclink("sweep", scenarios / "robustness.cfg", "--param", "inner.zeta1", "--values", "0.6,1.2",
           "--set", "sim.uncertainty=0", "--out", out / "sweep_zeta")
with open(out / "sweep_zeta" / "sweep.csv") as f:
    rows = list(csv.DictReader(f))
check(r.returncode == 0 and float(rows[1]["ripple_iL_total"]) < float(rows[0]["ripple_iL_total"]),
      "iL ripple decreases as zeta1 rises from 0.6 to 1.2")

# freq
r = dclink("freq", scenarios / "robustness.cfg", "--out", out / "freq")
check(r.returncode == 0, "freq exits 0")
with open(out / "freq" / "bode.csv") as f:
    rows = list(csv.DictReader(f))
w0 = 2 * math.pi * 120
at_w0 = min(rows, key=lambda row: abs(float(row["omega"]) - w0))
check(abs(float(at_w0["Gc_mag_db"]) + 6.196) < 0.01, f"Gc at 120 Hz {at_w0['Gc_mag_db']} dB")
check(float(rows[0]["H_mag_db"]) < float(rows[len(rows) // 4]["H_mag_db"]) and float(rows[0]["H_mag_db"]) < -40,
      "|H| falls toward low frequency")
with open(out / "freq" / "ratio.csv") as f:
    rows = list(csv.DictReader(f))
check(math.isfinite(float(rows[0]["flatness"])), "ratio.csv flatness finite")
check((out / "freq" / "plot_bode.py").exists(), "plot script emitted")

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
