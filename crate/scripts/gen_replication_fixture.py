#!/usr/bin/env python3
"""Generate the synthetic 256-library replication fixture.

The original curation spreadsheets are not redistributed here, so this
script builds a stand-in dataset whose aggregates match the reference
release: scenario counts (148 / 4 / 104), final category counts, the
Fleiss kappa of the reduced assessor pairs, and per-category / per-class
CVSS summaries. Every individual row is synthetic except for the handful
of libraries whose values are publicly documented (jfinal, stanford-corenlp,
itextpdf io).

Usage: python3 scripts/gen_replication_fixture.py [OUT_DIR]

The output is deterministic for a given seed.
"""

import csv
import math
import os
import random
import sys
from fractions import Fraction

SEED = 20240110
OUT = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
    os.path.dirname(__file__), "..", "fixtures", "replication")

REMOTE = {"System", "Database", "Communications", "Security", "Internet", "Utilities"}

FINAL_COUNTS = [
    ("Internet", 135), ("Database", 30), ("Text Processing", 21), ("Security", 19),
    ("Software Development", 14), ("Multimedia", 13), ("System", 13), ("Utilities", 6),
    ("Communications", 2), ("Scientific/Engineering", 2), ("Text Editors", 1),
]
ALL_TOPICS = [
    "Adaptive Technologies", "Artistic Software", "Database", "Communications",
    "Desktop Environment", "Documentation", "Education", "Games/Entertainment",
    "Home Automation", "Internet", "Multimedia", "Office/Business",
    "Other/Nonlisted Topic", "Printing", "Religion", "Scientific/Engineering",
    "Security", "Sociology", "Software Development", "System", "Terminals",
    "Text Editors", "Text Processing", "Utilities",
]
USED = [c for c, _ in FINAL_COUNTS]

# (union items, choose-one items) per final category; the rest are auto-final.
SPLIT = {
    "Internet": (41, 2), "Database": (14, 1), "Text Processing": (13, 1),
    "Security": (10, 0), "Software Development": (9, 0), "Multimedia": (6, 0),
    "System": (6, 0), "Utilities": (3, 0), "Communications": (0, 0),
    "Scientific/Engineering": (1, 0), "Text Editors": (1, 0),
}
KAPPA_SUM_SQ = 89932  # sum of squared rating counts giving kappa 0.381599

# CVSS targets: (min, median, max, mean, pop stdev)
CAT_TARGET = {
    "Internet": (4.70, 7.50, 10.00, 8.04, 1.29),
    "Database": (5.90, 9.10, 9.80, 8.66, 1.15),
    "Text Processing": (5.30, 8.50, 9.80, 8.03, 1.49),
    "Security": (5.30, 8.45, 9.90, 8.19, 1.39),
    "Software Development": (5.50, 7.50, 9.80, 8.11, 1.32),
    "Multimedia": (6.50, 6.50, 10.00, 7.33, 1.14),
    "System": (5.90, 9.00, 10.00, 8.70, 1.25),
    "Utilities": (7.50, 8.10, 9.80, 8.40, 0.63),
    "Communications": (6.80, 7.95, 9.10, 7.95, 1.15),
    "Scientific/Engineering": (5.30, 7.50, 9.80, 7.53, 1.84),
    "Text Editors": (9.80, 9.80, 9.80, 9.80, 0.00),
}
CLASS_TARGET = {
    "Remote network": (4.70, 8.10, 10.00, 8.22, 1.24),
    "Local": (5.30, 7.50, 10.00, 7.92, 1.46),
}
CVE_COUNTS = {
    "Internet": 206, "Database": 70, "Text Processing": 22, "Security": 24,
    "Software Development": 35, "Multimedia": 20, "System": 15, "Utilities": 36,
    "Communications": 2, "Scientific/Engineering": 3, "Text Editors": 1,
}
TOTAL_CVES = 434
BELOW_SEVEN = 65

rng = random.Random(SEED)


def build_libraries():
    named = {
        30: ("com.jfinal:jfinal", "Internet"),
        63: ("edu.stanford.nlp:stanford-corenlp", "Scientific/Engineering"),
    }
    extra = [
        ("com.itextpdf:io", "Text Editors"),
        ("org.apache.pdfbox:pdfbox", "Text Processing"),
        ("org.opencastproject:opencast-common-jpa-impl", "Database"),
        ("com.hubspot.jinjava:jinjava", "Software Development"),
        ("com.github.fracpete:vfsjfilechooser2", "System"),
        ("org.apache.camel:camel-core", "Software Development"),
        ("cd.go.plugin:go-plugin-api", "Software Development"),
        ("com.clever-cloud:biscuit-java", "Security"),
        ("org.jenkins-ci.plugins:authorize-project", "Security"),
    ]
    remaining = {c: n for c, n in FINAL_COUNTS}
    for _, (_, c) in named.items():
        remaining[c] -= 1
    for _, c in extra:
        remaining[c] -= 1
    pool = []
    for c, n in remaining.items():
        pool += [c] * n
    rng.shuffle(pool)
    libs = [None] * 256
    for i, v in named.items():
        libs[i] = v
    free = [i for i in range(256) if libs[i] is None]
    extra_pos = rng.sample(free, len(extra))
    for i, v in zip(extra_pos, extra):
        libs[i] = v
    n = 0
    for i in range(256):
        if libs[i] is None:
            c = pool.pop()
            libs[i] = (f"org.fixture.g{i + 1:03d}:lib-{i + 1:03d}", c)
            n += 1
    assert not pool
    return libs


def assign_scenarios(libs):
    by_cat = {}
    for i, (coord, c) in enumerate(libs):
        by_cat.setdefault(c, []).append(i)
    scen = [None] * 256
    fixed = {
        "com.jfinal:jfinal": "auto",
        "edu.stanford.nlp:stanford-corenlp": "union",
        "com.itextpdf:io": "union",
    }
    for c, idxs in by_cat.items():
        u, o = SPLIT[c]
        a = len(idxs) - u - o
        bag = ["union"] * u + ["one"] * o + ["auto"] * a
        for i in idxs:
            if libs[i][0] in fixed:
                bag.remove(fixed[libs[i][0]])
                scen[i] = fixed[libs[i][0]]
        rng.shuffle(bag)
        for i in idxs:
            if scen[i] is None:
                scen[i] = bag.pop()
    return scen


def other_topic(exclude):
    return rng.choice([t for t in ALL_TOPICS if t not in exclude])


def build_assessments(libs, scen):
    """Returns per-library (a1, a2, reduced_pair)."""
    # Union items: pick the 'other' reduced category so that the sum of squared
    # rating counts hits the kappa target exactly.
    union_idx = [i for i in range(256) if scen[i] == "union"]
    weights = {"Internet": 40, "Text Processing": 10, "Software Development": 8,
               "Database": 6, "Security": 6, "System": 6, "Utilities": 6,
               "Multimedia": 3, "Communications": 2, "Scientific/Engineering": 1}
    other = {}
    pinned = {"edu.stanford.nlp:stanford-corenlp": "Internet",
              "com.itextpdf:io": "Text Processing"}

    def pick(final):
        cands = [t for t in weights if t != final]
        return rng.choices(cands, [weights[t] for t in cands])[0]

    for i in union_idx:
        other[i] = pinned.get(libs[i][0]) or pick(libs[i][1])

    def sum_sq():
        cnt = {}
        for i in range(256):
            f = libs[i][1]
            if scen[i] == "union":
                cnt[f] = cnt.get(f, 0) + 1
                cnt[other[i]] = cnt.get(other[i], 0) + 1
            else:
                cnt[f] = cnt.get(f, 0) + 2
        return sum(v * v for v in cnt.values())

    free = [i for i in union_idx if libs[i][0] not in pinned]
    s = sum_sq()
    for _ in range(200000):
        if s == KAPPA_SUM_SQ:
            break
        i = rng.choice(free)
        old = other[i]
        other[i] = pick(libs[i][1])
        s2 = sum_sq()
        if abs(s2 - KAPPA_SUM_SQ) <= abs(s - KAPPA_SUM_SQ):
            s = s2
        else:
            other[i] = old
    assert s == KAPPA_SUM_SQ, s

    rows = []
    for i, (coord, f) in enumerate(libs):
        kind = scen[i]
        if coord == "edu.stanford.nlp:stanford-corenlp":
            rows.append((["Scientific/Engineering"], ["Internet", "Text Processing"]))
            continue
        if coord == "com.itextpdf:io":
            rows.append((["Text Editors"], ["Text Processing"]))
            continue
        if kind == "auto":
            shape = rng.choices(["0", "1/3", "1/2"], [100, 30, 18])[0]
            if coord == "com.jfinal:jfinal":
                shape = "0"
            if shape == "0":
                a, b = [f], [f]
            elif shape == "1/3":
                y = other_topic({f})
                two = [f, y] if rng.random() < 0.6 else [y, f]
                a, b = (two, [f]) if rng.random() < 0.5 else ([f], two)
            else:
                y = other_topic({f})
                z = other_topic({f, y})
                a = [f, y] if rng.random() < 0.6 else [y, f]
                b = [f, z] if rng.random() < 0.6 else [z, f]
        elif kind == "one":
            y = other_topic({f})
            a = [f, y]
            b = [f, y] if rng.random() < 0.5 else [y, f]
        else:
            o = other[i]
            first_is_final = rng.random() < 0.5
            r1, r2 = (f, o) if first_is_final else (o, f)
            used = {f, o}
            a = [r1]
            if rng.random() < 0.3:
                x = other_topic(used)
                used.add(x)
                a.append(x)
            b = [r2]
            if rng.random() < 0.3:
                x = other_topic(used)
                used.add(x)
                b.append(x)
        rows.append((a, b))
    return rows


def cve_counts_per_lib(libs):
    by_cat = {}
    for i, (coord, c) in enumerate(libs):
        by_cat.setdefault(c, []).append(i)
    counts = [0] * 256
    fixed = {"com.jfinal:jfinal": 2, "edu.stanford.nlp:stanford-corenlp": 2,
             "com.itextpdf:io": 1}
    for c, idxs in by_cat.items():
        total = CVE_COUNTS[c]
        for i in idxs:
            counts[i] = fixed.get(libs[i][0], 1)
        left = total - sum(counts[i] for i in idxs)
        flex = [i for i in idxs if libs[i][0] not in fixed]
        while left > 0:
            i = rng.choice(flex)
            if counts[i] < 6:
                counts[i] += 1
                left -= 1
    assert sum(counts) == TOTAL_CVES
    return counts


ESCALATED_CVES = 14  # keeps both class moments reachable from the category moments


def pick_escalations(libs, counts):
    base = {"edu.stanford.nlp:stanford-corenlp", "com.hubspot.jinjava:jinjava"}
    cands = [coord for coord, c in libs
             if c in ("Text Processing", "Software Development", "Multimedia")
             and coord not in base and coord != "org.apache.pdfbox:pdfbox"]
    n_of = {coord: counts[i] for i, (coord, _) in enumerate(libs)}
    while True:
        esc = base | set(rng.sample(cands, 4))
        if sum(n_of[c] for c in esc) == ESCALATED_CVES:
            return esc


def round_half_up(x, places=2):
    q = Fraction(x) * 10 ** places
    return math.floor(q + Fraction(1, 2))


def exact_stats(vals_tenths):
    v = sorted(vals_tenths)
    n = len(v)
    mn, mx = v[0], v[-1]
    med = Fraction(v[n // 2]) if n % 2 else Fraction(v[n // 2 - 1] + v[n // 2], 2)
    s = sum(v)
    s2 = sum(x * x for x in v)
    mean = Fraction(s, n)
    var = Fraction(n * s2 - s * s, n * n)
    # everything in tenths; convert to hundredths, half-up
    r = lambda q: math.floor(q * 10 + Fraction(1, 2))
    sd_hund = math.floor(math.sqrt(float(var)) * 10 + 0.5)
    # exact check of sd rounding: k = round(10*sqrt(var)) s.t. (k-.5)^2 <= 100 var < (k+.5)^2
    k = sd_hund
    while k > 0 and Fraction(2 * k - 1, 2) ** 2 > 100 * var:
        k -= 1
    while Fraction(2 * k + 1, 2) ** 2 <= 100 * var:
        k += 1
    return (mn * 10, r(med), mx * 10, r(mean), k)


def target_hund(t):
    return tuple(round(x * 100) for x in t)


def anneal(libs, counts, esc):
    """Assign one-decimal scores to every CVE.

    Each category's values are laid out in rank slots: the minimum, maximum
    and median slots are pinned, lower slots move within [min, median] and
    upper slots within [median, max], so category min/median/max hold by
    construction. The search then only has to fit means, standard deviations,
    the class medians and the sub-7 count.
    """
    owner = []
    for i, n in enumerate(counts):
        owner += [i] * n
    m = len(owner)
    cat_of = [libs[i][1] for i in owner]
    cls_of = []
    for i in owner:
        coord, c = libs[i]
        cls_of.append("Remote network" if (c in REMOTE or coord in esc) else "Local")

    target = {("cat", c): t for c, t in CAT_TARGET.items()}
    target.update({("cls", c): t for c, t in CLASS_TARGET.items()})
    groups = {}
    for k in range(m):
        groups.setdefault(("cat", cat_of[k]), []).append(k)
        groups.setdefault(("cls", cls_of[k]), []).append(k)

    jf = [k for k, i in enumerate(owner) if libs[i][0] == "com.jfinal:jfinal"]
    io = [k for k, i in enumerate(owner) if libs[i][0] == "com.itextpdf:io"]
    pinned_val = {jf[0]: 98, jf[1]: 78, io[0]: 98}

    vals = [0] * m
    band = [None] * m  # (lo, hi) inclusive, None = fixed
    for c in CAT_TARGET:
        ks = groups[("cat", c)]
        n = len(ks)
        t = target[("cat", c)]
        mn, mx = round(t[0] * 10), round(t[2] * 10)
        med2 = round(t[1] * 20)
        if n % 2:
            lo = hi = med2 // 2
            mid = [n // 2]
        else:
            lo, hi = (med2 // 2, med2 // 2) if med2 % 2 == 0 else ((med2 - 1) // 2, (med2 + 1) // 2)
            mid = [n // 2 - 1, n // 2]
        slots = []
        for r in range(n):
            if r == 0:
                slots.append(("fix", mn))
            elif r == n - 1:
                slots.append(("fix", mx))
            elif r in mid:
                slots.append(("fix", lo if r == mid[0] else hi))
            elif r < mid[0]:
                slots.append(("band", (mn, lo)))
            else:
                slots.append(("band", (hi, mx)))
        if n == 1:
            slots = [("fix", mn)]
        # pinned values take matching slots first
        order = [k for k in ks if k in pinned_val] + [k for k in ks if k not in pinned_val]
        free_slots = list(range(n))
        rng.shuffle(free_slots)
        for k in order:
            if k in pinned_val:
                v = pinned_val[k]
                s = next(s for s in free_slots
                         if (slots[s][0] == "fix" and slots[s][1] == v)
                         or (slots[s][0] == "band" and slots[s][1][0] <= v <= slots[s][1][1]))
                free_slots.remove(s)
                vals[k] = v
                band[k] = None
            else:
                s = free_slots.pop()
                kind, arg = slots[s]
                if kind == "fix":
                    vals[k] = arg
                    band[k] = None
                else:
                    vals[k] = rng.randint(arg[0], arg[1])
                    band[k] = arg

    def stats(g):
        v = [vals[k] for k in groups[g]]
        n = len(v)
        mean = sum(v) / n / 10
        sd = math.sqrt(max(0.0, sum((x / 10 - mean) ** 2 for x in v) / n))
        return v, mean, sd

    def gpen(g):
        v, mean, sd = stats(g)
        t = target[g]
        p = 0.0
        if g[0] == "cls":
            n = len(v)
            med2 = round(t[1] * 20)
            lo, hi = (med2 // 2, med2 // 2) if med2 % 2 == 0 else ((med2 - 1) // 2, (med2 + 1) // 2)
            half = (n - 1) // 2 if n % 2 else n // 2 - 1
            below_lo = sum(1 for x in v if x < lo)
            above_hi = sum(1 for x in v if x > hi)
            p += 5 * (max(0, below_lo - half) + max(0, above_hi - half))
            if n % 2 == 0 and lo != hi:
                p += 5 * max(0, n // 2 - sum(1 for x in v if x <= lo))
                p += 5 * max(0, n // 2 - sum(1 for x in v if x >= hi))
            if n % 2 and lo not in v:
                p += 5
        for s, tt in ((mean, t[3]), (sd, t[4])):
            d = abs(s - tt)
            if d > 0.0035:
                p += 100 * (d - 0.0035) + 1e-3
        return p

    below_n = sum(1 for x in vals if x < 70)
    gp = {g: gpen(g) for g in groups}
    memb = [[("cat", cat_of[k]), ("cls", cls_of[k])] for k in range(m)]
    bpen = lambda b: 0.5 * abs(b - BELOW_SEVEN)
    total = sum(gp.values()) + bpen(below_n)
    movable = [k for k in range(m) if band[k] is not None]
    by_cat = {}
    for k in movable:
        by_cat.setdefault(cat_of[k], []).append(k)
    temp = 0.3
    steps = 0
    while steps < 4_000_000:
        steps += 1
        if rng.random() < 0.3:
            # swap values between two CVEs of the same category sharing a band
            k = rng.choice(movable)
            k2 = rng.choice(by_cat[cat_of[k]])
            if k2 == k or band[k2] != band[k] or cls_of[k] == cls_of[k2]:
                continue
            changes = [(k, vals[k2]), (k2, vals[k])]
        else:
            k = rng.choice(movable)
            lo, hi = band[k]
            new = vals[k] + rng.choice([-5, -3, -2, -1, 1, 2, 3, 5])
            if new < lo or new > hi:
                continue
            changes = [(k, new)]
        old = [(k, vals[k]) for k, _ in changes]
        touched = set()
        nb = below_n
        for k, v in changes:
            nb += (v < 70) - (vals[k] < 70)
            vals[k] = v
            touched.update(memb[k])
        newp = {g: gpen(g) for g in touched}
        delta = sum(newp[g] - gp[g] for g in touched) + bpen(nb) - bpen(below_n)
        if delta <= 0 or rng.random() < math.exp(-delta / temp):
            gp.update(newp)
            below_n = nb
            total += delta
        else:
            for k, v in old:
                vals[k] = v
        if steps % 5000 == 0:
            temp = max(temp * 0.95, 2e-4)
            ok = all(exact_stats([vals[k] for k in vs]) == target_hund(target[g])
                     for g, vs in groups.items())
            if ok and below_n == BELOW_SEVEN:
                break
            if steps % 100000 == 0:
                bad = {g[1]: round(p, 3) for g, p in gp.items() if p > 0}
                print(f"step {steps} below {below_n} temp {temp:.2e} {bad}", file=sys.stderr)
    for g, vs in groups.items():
        got = exact_stats([vals[k] for k in vs])
        want = target_hund(target[g])
        assert got == want, (g, got, want)
    assert below_n == BELOW_SEVEN
    per_lib = [[] for _ in range(256)]
    for k, i in enumerate(owner):
        per_lib[i].append(vals[k])
    return per_lib


def main():
    libs = build_libraries()
    scen = assign_scenarios(libs)
    ass = build_assessments(libs, scen)
    counts = cve_counts_per_lib(libs)
    esc = pick_escalations(libs, counts)
    per_lib = anneal(libs, counts, esc)

    os.makedirs(OUT, exist_ok=True)
    with open(os.path.join(OUT, "libraries.txt"), "w") as fh:
        fh.write("# synthetic replication fixture: one group:artifact per line\n")
        for coord, _ in libs:
            fh.write(coord + "\n")

    # sources: 6 without repository, 13 without website, 18 without wiki/doc
    idx = list(range(256))
    no_repo = set(rng.sample(idx, 6))
    no_web = set(rng.sample(idx, 13))
    no_wiki = set(rng.sample(idx, 18))
    with open(os.path.join(OUT, "sources.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["coordinate", "registry_entry", "repository", "website", "wiki_doc"])
        for i, (coord, _) in enumerate(libs):
            g, a = coord.split(":")
            w.writerow([
                coord,
                f"https://central.sonatype.com/artifact/{g}/{a}",
                "" if i in no_repo else f"https://github.com/{g.split('.')[-1]}/{a}",
                "" if i in no_web else f"https://{a}.{g.split('.')[-1]}.example.org/",
                "" if i in no_wiki else f"https://{a}.{g.split('.')[-1]}.example.org/docs/",
            ])

    for n, col in ((1, 0), (2, 1)):
        with open(os.path.join(OUT, f"assessor_{n}.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["coordinate", "category", "alternate", "done"])
            for i, (coord, _) in enumerate(libs):
                ch = ass[i][col]
                w.writerow([coord, ch[0], ch[1] if len(ch) > 1 else "", "DONE"])

    # AV: 10 libraries without any NETWORK vector (4 local, 6 remote, none escalated)
    local_plain = [coord for coord, c in libs if c not in REMOTE and coord not in esc
                   and coord != "com.itextpdf:io"]
    remote_plain = [coord for coord, c in libs if c in REMOTE and coord != "com.jfinal:jfinal"]
    no_net = set(rng.sample(local_plain, 4)) | set(rng.sample(remote_plain, 6))
    vectors = ["LOCAL", "ADJACENT_NETWORK", "PHYSICAL"]

    cve_rows = []
    serial = 90000
    for i, (coord, c) in enumerate(libs):
        for j, v in enumerate(per_lib[i]):
            if coord == "com.jfinal:jfinal":
                cid = ["CVE-2021-31649", "CVE-2019-17352"][j]
            elif coord == "com.itextpdf:io":
                cid = "CVE-2021-43113"
            else:
                serial += 1
                cid = f"CVE-{2015 + serial % 8}-{serial}"
            if coord in no_net:
                av = rng.choice(vectors)
            elif rng.random() < 0.1 and j > 0:
                av = rng.choice(vectors)
            else:
                av = "NETWORK"
            sel = v if v >= 70 else rng.choice([70, 72, 75, 78, 81])
            cve_rows.append([coord, cid, f"{sel / 10:.1f}", f"{v / 10:.1f}", av])
    with open(os.path.join(OUT, "cves.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["coordinate", "cve_id", "selection_score", "cvss_nvd", "attack_vector"])
        w.writerows(cve_rows)

    # arbitration and class-revision decisions
    comments = {
        "edu.stanford.nlp:stanford-corenlp": (
            "NLP toolkit; research/scientific purpose dominates",
            "CVEs concern XML handling in the bundled server, which this artifact ships"),
        "com.itextpdf:io": (
            "PDF editing core; editor purpose outweighs text processing",
            "injection happens through an external tool; not relevant to this library's class"),
    }
    with open(os.path.join(OUT, "decisions.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["coordinate", "arbitrated_category", "revision", "arbitration_comment",
                    "revision_comment"])
        for i, (coord, c) in enumerate(libs):
            arb = c if scen[i] != "auto" else ""
            local = c not in REMOTE
            has_net = coord not in no_net
            rev = ""
            if local and has_net:
                rev = "ESCALATE" if coord in esc else "KEEP"
            ac, rc = comments.get(coord, ("", ""))
            if arb and not ac:
                ac = f"sources favour {c}"
            if rev and not rc:
                rc = ("network-facing use confirmed by CVE context" if rev == "ESCALATE"
                      else "CVE context does not change the local orientation")
            w.writerow([coord, arb, rev, ac, rc])

    with open(os.path.join(OUT, "reference_counts.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "libraries"])
        for c, n in FINAL_COUNTS:
            w.writerow([c, n])
        w.writerow(["Remote network", 211])
        w.writerow(["Local", 48])

    print("wrote fixture to", os.path.abspath(OUT), file=sys.stderr)


if __name__ == "__main__":
    main()
