"""Acceptance criteria 1-9, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line (visible with ``-s``);
the terminal summary aggregates them per criterion.
"""

import time

import numpy as np
import pytest

import oracles
from synqa.accuracy import compute_accuracy, expected_max_accuracy, pair_start
from synqa.cli import main
from synqa.datamodel import from_records
from synqa.distances import nearest_distances
from synqa.embedding import DIM, embed, serialize_dataset
from synqa.evaluate import report
from synqa.fixtures import flip_k, mixed_dataset, sequential_dataset, shuffle_within_subjects, split, to_csv
from synqa.similarity import discriminator_auc


def check(criterion: int, ok: bool, detail: str) -> None:
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# -- 1: TVD oracle equivalence ------------------------------------------------


POOLS = {"numeric": [0.0, 1.5, 3.0], "categorical": ["a", "b", "c"]}


def _random_kinds(rng, sequential: bool) -> dict:
    kinds = {"sid": "categorical"} if sequential else {}
    for j in range(int(rng.integers(2, 6)) - (1 if sequential else 0)):
        kinds[f"c{j}"] = "numeric" if rng.random() < 0.5 else "categorical"
    return kinds


def _random_records(rng, kinds: dict) -> dict:
    """Up to 100 rows; three values plus missing keep every column at four bins or fewer."""
    n = int(rng.integers(8, 101))
    records = {}
    for name, kind in kinds.items():
        if name == "sid":
            records[name] = [f"s{int(i)}" for i in np.sort(rng.integers(0, max(2, n // 4), size=n))]
        else:
            pool = POOLS[kind]
            records[name] = [None if rng.random() < 0.1 else pool[int(rng.integers(3))] for _ in range(n)]
    return records


def _oracle_coherence(trn_rec, syn_rec, col, numeric, seed):
    ref = oracles.quantile_edges(trn_rec[col]) if numeric else oracles.top_labels(trn_rec[col])

    def pairs(rec):
        subjects: dict = {}
        for i, s in enumerate(rec["sid"]):
            subjects.setdefault(s, []).append(i)
        out = []
        for s, rows in subjects.items():
            if len(rows) >= 2:
                # the sampled pair is an input to the count; only the counting is re-derived here
                t = pair_start(seed, s, len(rows))
                a, b = rec[col][rows[t]], rec[col][rows[t + 1]]
                out.append((oracles.bin_of(a, numeric, ref), oracles.bin_of(b, numeric, ref)))
        return oracles.joint_distribution([p[0] for p in out], [p[1] for p in out])

    return 1.0 - oracles.tvd_dict(pairs(trn_rec), pairs(syn_rec))


def _nan_to_none(values):
    return [None if isinstance(v, float) and np.isnan(v) else v for v in values]


@pytest.mark.acceptance(criterion=1)
def test_c1_tvd_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst, compared = 0.0, 0
    for f in range(50):
        sequential = f % 2 == 1
        kinds = _random_kinds(rng, sequential)
        trn_rec, syn_rec = _random_records(rng, kinds), _random_records(rng, kinds)
        seq_key = "sid" if sequential else None
        trn = from_records(trn_rec, kinds=kinds, sequence_key=seq_key)
        syn = from_records(syn_rec, kinds=kinds, name="syn", sequence_key=seq_key)
        res = compute_accuracy(trn, syn, seed=f)
        cols = [c for c in trn_rec if c != "sid"]
        num = {c: kinds[c] == "numeric" for c in cols}
        tv = {c: _nan_to_none(trn[c].values.tolist()) for c in cols}
        sv = {c: _nan_to_none(syn[c].values.tolist()) for c in cols}
        for c in cols:
            diff = abs(res.per_column_univariate[c] - oracles.univariate(tv[c], sv[c], num[c]))
            worst, compared = max(worst, diff), compared + 1
        for (m, n), score in res.per_pair_bivariate.items():
            diff = abs(score - oracles.bivariate(tv[m], tv[n], sv[m], sv[n], num[m], num[n]))
            worst, compared = max(worst, diff), compared + 1
        if sequential and res.coherence is not None:
            trn_raw = {"sid": trn_rec["sid"], **tv}
            syn_raw = {"sid": syn_rec["sid"], **sv}
            for c, score in res.per_column_coherence.items():
                diff = abs(score - _oracle_coherence(trn_raw, syn_raw, c, num[c], f))
                worst, compared = max(worst, diff), compared + 1
    elapsed = time.perf_counter() - start
    check(1, worst <= 1e-12 and elapsed < 10, f"{compared} scores, max |diff| {worst:.2e}, {elapsed:.1f}s")


# -- 2: identity ceiling ------------------------------------------------------


@pytest.mark.acceptance(criterion=2)
def test_c2_identity_ceiling():
    trn, hol = split(mixed_dataset(1000, seed=21), 0.5, seed=21)
    m = report(trn.with_name("syn"), trn, hol).metrics
    ok = (
        m.accuracy["overall"] == 1.0
        and m.distances["ims_training"] == 1.0
        and m.distances["dcr_training"] == 0.0
        and m.distances["dcr_share"] == 1.0
    )
    check(2, ok, f"overall {m.accuracy['overall']}, ims_training {m.distances['ims_training']}, "
                 f"dcr_training {m.distances['dcr_training']}, dcr_share {m.distances['dcr_share']}")


# -- 3: holdout-as-synthetic calibration --------------------------------------


@pytest.fixture(scope="module")
def holdout_as_synthetic():
    start = time.perf_counter()
    trn, hol = split(mixed_dataset(10_000, seed=0), 0.5, seed=0)
    metrics = report(hol.with_name("syn"), trn, hol, seed=0).metrics
    return metrics, time.perf_counter() - start


@pytest.mark.acceptance(criterion=3)
def test_c3_holdout_as_synthetic_accuracy_and_similarity(holdout_as_synthetic):
    metrics, elapsed = holdout_as_synthetic
    start = time.perf_counter()
    acc, sim = metrics.accuracy, metrics.similarity
    aucs = []
    for seed in range(10):
        trn, hol = split(mixed_dataset(10_000, seed=seed), 0.5, seed=seed)
        aucs.append(discriminator_auc(embed(serialize_dataset(trn)), embed(serialize_dataset(hol)), seed=seed))
    elapsed += time.perf_counter() - start
    ok = (
        acc["overall_max"] - 0.02 <= acc["overall"] <= 1.0
        and sim["cosine_similarity_training_synthetic"] == sim["cosine_similarity_training_holdout"]
        and all(0.45 <= a <= 0.55 for a in aucs)
        and elapsed < 60
    )
    check(3, ok, f"overall {acc['overall']:.4f} vs max {acc['overall_max']:.4f}, cosines equal "
                 f"{sim['cosine_similarity_training_synthetic'] == sim['cosine_similarity_training_holdout']}, "
                 f"AUC range [{min(aucs):.4f}, {max(aucs):.4f}], {elapsed:.1f}s")


@pytest.mark.acceptance(criterion=3)
def test_c3_holdout_as_synthetic_dcr_share(holdout_as_synthetic):
    # Every synthetic row is a holdout row here, so its holdout distance is 0 and
    # the share sits near 0 rather than 0.5; kept as stated, see the decisions log.
    metrics, _ = holdout_as_synthetic
    share = metrics.distances["dcr_share"]
    check(3, 0.45 <= share <= 0.55, f"dcr_share {share:.4f} (required [0.45, 0.55])")


# -- 4: max-accuracy estimator validity ---------------------------------------


@pytest.mark.acceptance(criterion=4)
def test_c4_max_accuracy_estimator():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(20):
        k = int(rng.integers(2, 12))
        p = rng.dirichlet(np.ones(k))
        for n in (200, 1000, 5000):
            a = rng.multinomial(n, p, size=100_000) / n
            b = rng.multinomial(n, p, size=100_000) / n
            mc = 1.0 - 0.5 * np.abs(a - b).sum(axis=1).mean()
            worst = max(worst, abs(expected_max_accuracy(p, n, n) - mc))
    check(4, worst <= 0.005, f"60 (distribution, n) cases, max |closed form - Monte Carlo| {worst:.5f}")


# -- 5: flipK monotonicity ----------------------------------------------------


@pytest.mark.acceptance(criterion=5)
def test_c5_flipk_monotonicity():
    start = time.perf_counter()
    trn = mixed_dataset(3000, seed=5)
    ks = [0, 5, 20, 50, 90]
    overall, dcr = [], []
    for k in ks:
        m = report(flip_k(trn, k, seed=6), trn).metrics
        overall.append(m.accuracy["overall"])
        dcr.append(m.distances["dcr_training"])
    elapsed = time.perf_counter() - start
    ok = (
        all(a >= b for a, b in zip(overall, overall[1:]))
        and all(a <= b for a, b in zip(dcr, dcr[1:]))
        and overall[0] > overall[-1]
        and dcr[0] < dcr[-1]
        and elapsed < 120
    )
    check(5, ok, f"K={ks} overall={[round(x, 4) for x in overall]} dcr_training={[round(x, 4) for x in dcr]}, {elapsed:.1f}s")


# -- 6: DCR oracle equivalence ------------------------------------------------


@pytest.mark.acceptance(criterion=6)
def test_c6_dcr_oracle_equivalence():
    rng = np.random.default_rng(6)
    mismatches, total = 0, 0
    for f in range(20):
        n_ref, n_q = int(rng.integers(5, 201)), int(rng.integers(5, 201))
        if f % 2 == 0:
            R = embed(serialize_dataset(mixed_dataset(n_ref, seed=f))).data
            Q = embed(serialize_dataset(mixed_dataset(n_q, seed=100 + f))).data
            Q[: min(5, n_q)] = R[: min(5, n_q)]  # exact duplicates
        else:
            R = rng.normal(size=(n_ref, DIM))
            Q = np.vstack([rng.normal(size=(n_q, DIM)), R[:3] + 1e-12])
        got = nearest_distances(Q, R)
        for i, q in enumerate(Q):
            total += 1
            mismatches += got[i] != oracles.nearest(q, R)
    check(6, mismatches == 0, f"{total} queries over 20 fixtures, {mismatches} differ from brute force")


# -- 7: discriminator sanity --------------------------------------------------


def _unit(rng, n, shift=None):
    X = rng.normal(size=(n, DIM)) + (0 if shift is None else shift)
    return X / np.linalg.norm(X, axis=1, keepdims=True)


@pytest.mark.acceptance(criterion=7)
def test_c7_discriminator_shifted_and_identical():
    rng = np.random.default_rng(7)
    shift = np.zeros(DIM)
    shift[:20] = 5.0
    shifted = discriminator_auc(_unit(rng, 500, shift), _unit(rng, 500))
    same = []
    for seed in range(10):
        r = np.random.default_rng(1000 + seed)
        X = _unit(r, 1000)
        same.append(discriminator_auc(X[:500], X[500:], seed=seed))
    ok = shifted >= 0.99 and all(0.4 <= a <= 0.6 for a in same)
    check(7, ok, f"shifted {shifted:.4f}, identical range [{min(same):.4f}, {max(same):.4f}]")


@pytest.mark.acceptance(criterion=7)
def test_c7_discriminator_swap_antisymmetry():
    # A refit discriminator separates B from A as well as A from B, so swapping
    # the inputs keeps the AUC rather than mapping it to 1 - AUC; kept as stated,
    # see the decisions log.
    rng = np.random.default_rng(17)
    shift = np.zeros(DIM)
    shift[:20] = 5.0
    A, B = _unit(rng, 500, shift), _unit(rng, 500)
    ab, ba = discriminator_auc(A, B), discriminator_auc(B, A)
    gap = abs(ba - (1.0 - ab))
    check(7, gap <= 1e-9, f"AUC(a, b) {ab:.4f}, AUC(b, a) {ba:.4f}, |AUC(b, a) - (1 - AUC(a, b))| {gap:.4f}")


# -- 8: end-to-end determinism ------------------------------------------------


@pytest.mark.acceptance(criterion=8)
def test_c8_cli_determinism(tmp_path):
    trn, hol = split(sequential_dataset(200, seed=8), 0.5, seed=8)
    syn = sequential_dataset(100, seed=9, name="syn")
    for name, ds in (("trn", trn), ("hol", hol), ("syn", syn)):
        to_csv(ds, tmp_path / f"{name}.csv")
    base = ["--syn-tgt", str(tmp_path / "syn.csv"), "--trn-tgt", str(tmp_path / "trn.csv"),
            "--hol-tgt", str(tmp_path / "hol.csv"), "--sequence-key", "user_id", "--seed", "11"]
    codes = [main(base + ["--out", str(tmp_path / d)]) for d in ("run1", "run2")]
    same = all(
        (tmp_path / "run1" / f).read_bytes() == (tmp_path / "run2" / f).read_bytes()
        for f in ("metrics.json", "report.html")
    )
    check(8, codes == [0, 0] and same, f"exit codes {codes}, outputs byte-identical {same}")


# -- 9: coherence discrimination ----------------------------------------------


@pytest.mark.acceptance(criterion=9)
def test_c9_coherence_discrimination():
    full = sequential_dataset(3000, seed=9, min_len=10, max_len=30)
    trn, hol = split(full, 0.5, seed=9)
    a = compute_accuracy(trn, hol.with_name("syn"), seed=9).coherence
    b = compute_accuracy(trn, shuffle_within_subjects(hol, seed=10).with_name("syn"), seed=9).coherence
    check(9, a - b >= 0.05, f"holdout {a:.4f}, shuffled {b:.4f}, gap {a - b:.4f}")
