#!/usr/bin/env python3
"""Generate the synthetic corpus used by the acceptance tests.

The corpus is a `git log --numstat` history, a release list, advisory records
and a ground-truth label file. Vulnerable files start with a single owner and
then attract a stream of one-off contributors, so ownership falls and the
share of minor contributors rises with component age. Advisories hit each
vulnerable file at ages spread over every time stage.

Usage: python3 generate.py [output_dir]   (defaults to this script's directory)
"""

import csv
import hashlib
import json
import os
import random
import sys
from datetime import datetime, timezone

SEED = 20240501
START = int(datetime(2019, 1, 1, tzinfo=timezone.utc).timestamp())
DAY = 86_400
SPAN_DAYS = 1_500

N_VULNERABLE = 5
N_CLEAN = 35

OWNER_AGES = [0, 1, 3]
DRIVE_BY_AGES = [20, 60, 100, 130, 160, 190, 220, 250, 300, 400,
                 500, 600, 700, 800, 900, 1000, 1100, 1150, 1200, 1250]

# Age window per time stage, kept clear of the stage boundaries.
STAGE_AGES = {1: (4, 6), 2: (30, 85), 3: (120, 260), 4: (400, 1000), 5: (1100, 1300)}


def time_stage(age_days):
    """Stage of a component age in days: 7 days, 3 months, 9 months, 3 years."""
    if age_days <= 7:
        return 1
    if age_days <= 90:
        return 2
    if age_days <= 270:
        return 3
    if age_days < 1095:
        return 4
    return 5


def sha(*parts):
    return hashlib.sha1("|".join(str(p) for p in parts).encode()).hexdigest()


def rfc3339(ts):
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def build(rng):
    commits = []  # (timestamp, author, [(added, deleted, path)] or None for merges)
    vulnerable = [
        "src/runtime/executor.cc",
        "src/ops/tensor_ops.cc",
        "src/io/decoder.cc",
        "src/graph/optimizer.cc",
        "src/api/session.py",
    ]
    clean = [f"src/{area}/module_{i:02d}.{ext}"
             for i, (area, ext) in enumerate(
                 (["util", "py"], ["kernels", "cc"], ["docs", "md"], ["tools", "py"], ["tests", "py"]) * 7)]
    clean[-1] = "assets/logo.png"
    assert len(clean) == N_CLEAN

    created = {}
    for k, path in enumerate(vulnerable):
        day0 = 10 + 15 * k
        created[path] = START + day0 * DAY + 9 * 3600
        for age in OWNER_AGES:
            ts = created[path] + age * DAY + rng.randrange(0, 3600)
            commits.append((ts, f"owner{k}@example.org", [(rng.randrange(20, 200), rng.randrange(0, 20), path)]))
        for j, age in enumerate(DRIVE_BY_AGES):
            ts = created[path] + (age + rng.randrange(-3, 4)) * DAY + rng.randrange(0, 3600)
            commits.append((ts, f"drive{k}-{j}@contrib.example.net", [(rng.randrange(1, 30), rng.randrange(0, 15), path)]))

    for i, path in enumerate(clean):
        day0 = rng.randrange(0, SPAN_DAYS - 60)
        created[path] = START + day0 * DAY + 10 * 3600
        owner = f"maint{i % 6}@example.org"
        n = rng.randrange(2, 4)
        for c in range(n):
            ts = created[path] + (c * rng.randrange(5, 20)) * DAY + rng.randrange(0, 3600)
            if path.endswith(".png"):
                changes = [(None, None, path)]
            else:
                changes = [(rng.randrange(10, 150), rng.randrange(0, 30), path)]
            commits.append((ts, owner, changes))
        if i % 5 == 0:
            ts = created[path] + 30 * DAY
            commits.append((ts, "reviewer@example.org", [(rng.randrange(1, 10), rng.randrange(0, 5), path)]))

    # Two merge commits without numstat.
    for day in (400, 900):
        commits.append((START + day * DAY + 7 * 3600, "release-bot@example.org", None))

    # A final commit pins the snapshot at the end of the span.
    commits.append((START + SPAN_DAYS * DAY, "maint0@example.org", [(1, 1, clean[0])]))

    commits.sort(key=lambda c: c[0])
    # Strictly increasing timestamps keep the order unambiguous.
    fixed = []
    last = None
    for ts, author, changes in commits:
        if last is not None and ts <= last:
            ts = last + 1
        fixed.append((ts, author, changes))
        last = ts
    return fixed, vulnerable, clean, created


def render_log(commits):
    hashes = [sha(SEED, i, ts) for i, (ts, _, _) in enumerate(commits)]
    records = []
    for i, (ts, author, changes) in enumerate(commits):
        if changes is None:
            parents = f"{hashes[i - 1]} {sha('side', i)}"
        else:
            parents = hashes[i - 1] if i > 0 else ""
        lines = [f"@@@{hashes[i]}|{author}|{ts}|{parents}"]
        for added, deleted, path in changes or []:
            if added is None:
                lines.append(f"-\t-\t{path}")
            else:
                lines.append(f"{added}\t{deleted}\t{path}")
        records.append("\n".join(lines))
    # git prints newest first.
    return "\n\n".join(reversed(records)), hashes


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
    rng = random.Random(SEED)
    commits, vulnerable, clean, created = build(rng)
    log, hashes = render_log(commits)

    # An early burst of releases, a long quiet period and a late burst. Old
    # components see four releases inside six months and settle in the
    # residual initiation stage, while young ones have no release yet.
    releases = [(f"v0.{n + 1}.0", START + day * DAY + 15 * 3600) for n, day in enumerate((290, 310, 330, 350))]
    releases += [(f"v1.{n}.0", START + day * DAY + 15 * 3600) for n, day in enumerate((1400, 1420, 1440, 1460))]

    vulns = []
    labels = []
    counter = 0
    for k, path in enumerate(vulnerable):
        for stage in ((k) % 5 + 1, (k + 2) % 5 + 1, (k + 4) % 5 + 1):
            lo, hi = STAGE_AGES[stage]
            age_days = rng.randrange(lo, hi + 1)
            published = created[path] + age_days * DAY + 3 * 3600
            # Age runs from the file's first commit, which lands within an
            # hour of its nominal creation time.
            first_touch = min(ts for ts, _, ch in commits if ch and any(p == path for _, _, p in ch))
            age = (published - first_touch) / DAY
            assert time_stage(age) == stage
            touching = [hashes[i] for i, (ts, _, ch) in enumerate(commits)
                        if ch and ts <= published and any(p == path for _, _, p in ch)]
            counter += 1
            vuln_id = f"CVE-2099-{1000 + counter}"
            day = (published - START) / DAY
            severity = None if counter % 7 == 0 else round(min(10.0, 2.0 + day / 250 + rng.uniform(-0.5, 0.5)), 1)
            record = {
                "id": vuln_id,
                "severity": severity,
                "published": rfc3339(published),
                "commits": [touching[-1]],
                "files": [path],
            }
            # Pairs of advisories fixed by the same pull request share a key.
            if counter in (2, 3):
                record["group_key"] = "pr-4411"
            elif counter in (8, 9):
                record["group_key"] = "pr-5120"
            vulns.append((published, record))
            labels.append({
                "component": path,
                "is_vulnerable": 1,
                "vulnerability": vuln_id,
                "age_days": f"{age:.6f}",
                "time_stage": stage,
            })
    for path in clean:
        labels.append({"component": path, "is_vulnerable": 0, "vulnerability": "", "age_days": "", "time_stage": ""})

    with open(os.path.join(out, "history.log"), "w", newline="\n") as f:
        f.write(log)
    with open(os.path.join(out, "releases.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["name", "timestamp"])
        for name, ts in releases:
            w.writerow([name, rfc3339(ts)])
    with open(os.path.join(out, "vulns.jsonl"), "w", newline="\n") as f:
        for _, record in sorted(vulns, key=lambda v: v[0]):
            f.write(json.dumps(record, sort_keys=True) + "\n")
    with open(os.path.join(out, "labels.csv"), "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["component", "is_vulnerable", "vulnerability", "age_days", "time_stage"],
                           lineterminator="\n")
        w.writeheader()
        w.writerows(labels)
    print(f"{len(commits)} commits, {len(vulnerable) + len(clean)} files, {len(vulns)} advisories, "
          f"{len(releases)} releases")


if __name__ == "__main__":
    main()
