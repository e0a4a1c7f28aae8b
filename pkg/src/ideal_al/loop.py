"""Active-learning loop: train, score, select, annotate, repeat.

Each cycle runs an SSL training phase (MixUp over labeled, unlabeled and
two-granularity augmented batches), then a read-only scoring pass over the
unlabeled pool, the two-stage selection, and oracle annotation. Baseline
strategies (random / entropy / coreset) share the training phase and swap
only the selection rule, so paired comparisons isolate the selector.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import augment, propagator, selector
from .errors import ConfigError, ExhaustedPoolError, UsageError
from .model import Classifier, kl_rows, train_step


class Oracle:
    """Ground-truth labeler with an access audit trail."""

    def __init__(self, labels_by_id):
        self._labels = dict(labels_by_id)
        self.audit = []

    def query(self, sample_id):
        if sample_id not in self._labels:
            raise LookupError(f"unknown sample id {sample_id!r}")
        self.audit.append(sample_id)
        return self._labels[sample_id]


@dataclass
class Pool:
    labeled: dict            # id -> class
    unlabeled: set           # ids
    features: dict           # id -> normalized feature vector

    def check(self):
        overlap = set(self.labeled) & self.unlabeled
        if overlap:
            raise UsageError(f"ids in both pools: {sorted(overlap)[:5]}")

    @property
    def n_labeled(self):
        return len(self.labeled)

    @property
    def n_unlabeled(self):
        return len(self.unlabeled)


@dataclass
class CycleReport:
    cycle: int
    n_labeled: int
    accuracy: float
    mean_in_total: float
    max_in_total: float
    select_ms: float
    selected_ids: list
    strategy: str
    seed: int


def baseline_select(strategy, records, budget, rng, labeled_reps=None):
    """Comparator selection rules over scored records.

    random: uniform without replacement; entropy: top-budget by prediction
    entropy; coreset: greedy k-center on representations, seeded by the
    labeled set's representations.
    """
    if budget > len(records):
        raise UsageError("budget exceeds pool size")
    ordered = sorted(records, key=lambda r: r.sample_id)
    if strategy == "random":
        idx = rng.choice(len(ordered), size=budget, replace=False)
        return [ordered[i].sample_id for i in sorted(idx)]
    if strategy == "entropy":
        ranked = sorted(ordered, key=lambda r: (-r.entropy, r.sample_id))
        return [r.sample_id for r in ranked[:budget]]
    if strategy == "coreset":
        reps = np.stack([np.asarray(r.representation, dtype=float) for r in ordered])
        if labeled_reps is not None and len(labeled_reps):
            L = np.atleast_2d(np.asarray(labeled_reps, dtype=float))
            d2 = ((reps[:, None, :] - L[None, :, :]) ** 2).sum(axis=2)
            min_dist = np.sqrt(d2.min(axis=1))
        else:
            min_dist = np.full(len(ordered), np.inf)
        chosen = []
        for _ in range(budget):
            i = int(np.argmax(min_dist))  # argmax takes the lowest index on ties
            chosen.append(ordered[i].sample_id)
            dist_new = np.linalg.norm(reps - reps[i], axis=1)
            min_dist = np.minimum(min_dist, dist_new)
            min_dist[i] = -np.inf
        return chosen
    raise ConfigError("strategy", f"unknown strategy {strategy!r}")


class ActiveLearningLoop:
    """Owns one run's state: pool, oracle, model, per-cycle RNG streams."""

    def __init__(self, config, dataset, test_data=None):
        config.validate()
        self.config = config
        self.dataset = dataset
        self.test_data = test_data if test_data is not None else dataset
        self.oracle = Oracle(dict(zip(dataset.ids.tolist(), dataset.labels.tolist())))
        self.reports = []
        self._root_rng = np.random.default_rng(config.seed)
        self._init_pool_rng = np.random.default_rng(
            np.random.SeedSequence([config.seed, 0xA11]).generate_state(4)
        )
        self.pool = self._initial_pool()
        self.model = self._initial_model()

    # -- setup ---------------------------------------------------------

    def _initial_pool(self):
        ds = self.dataset
        features = {int(i): ds.features[k] for k, i in enumerate(ds.ids)}
        labeled = {}
        rng = self._init_pool_rng
        for c in range(ds.n_classes):
            class_ids = sorted(int(i) for i, y in zip(ds.ids, ds.labels) if y == c)
            if len(class_ids) < self.config.init_per_class:
                raise UsageError(f"class {c} has too few samples to seed the pool")
            picks = rng.choice(len(class_ids), size=self.config.init_per_class,
                               replace=False)
            for p in picks:
                sid = class_ids[int(p)]
                labeled[sid] = self.oracle.query(sid)
        unlabeled = {int(i) for i in ds.ids} - set(labeled)
        pool = Pool(labeled=labeled, unlabeled=unlabeled, features=features)
        pool.check()
        return pool

    def _initial_model(self):
        sizes = [self.dataset.dim, *self.config.hidden_sizes, self.dataset.n_classes]
        rng = np.random.default_rng(
            np.random.SeedSequence([self.config.seed, 0x307]).generate_state(4)
        )
        return Classifier.from_sizes(sizes, tap_layer=self.config.tap_layer, rng=rng)

    def _cycle_rngs(self, t):
        """Independent streams per cycle so ablation paths that skip a stage
        leave the other stages' draws untouched."""
        streams = {}
        for name, tag in (("train", 1), ("score", 2), ("select", 3)):
            ss = np.random.SeedSequence([self.config.seed, t, tag])
            streams[name] = np.random.default_rng(ss.generate_state(4))
        return streams

    # -- SSL training phase -------------------------------------------

    def _one_hot(self, y):
        out = np.zeros(self.dataset.n_classes)
        out[y] = 1.0
        return out

    def _train_phase(self, rng):
        cfg = self.config
        if cfg.cold_start:
            self.model = self._initial_model()
        labeled_ids = sorted(self.pool.labeled)
        unlabeled_ids = sorted(self.pool.unlabeled)
        Xl_all = np.stack([self.pool.features[i] for i in labeled_ids])
        Yl_all = np.stack([self._one_hot(self.pool.labeled[i]) for i in labeled_ids])
        Xu_all = (np.stack([self.pool.features[i] for i in unlabeled_ids])
                  if unlabeled_ids else None)
        w = np.asarray(cfg.resolved_weights())
        for _ in range(cfg.train_steps_per_cycle):
            bl = rng.choice(len(labeled_ids), size=min(cfg.batch_size, len(labeled_ids)),
                            replace=len(labeled_ids) < cfg.batch_size)
            Xl, Yl = Xl_all[bl], Yl_all[bl]
            if Xu_all is not None and len(Xu_all):
                bu = rng.choice(len(Xu_all), size=min(cfg.batch_size, len(Xu_all)),
                                replace=False)
                Xu = Xu_all[bu]
                A = augment.coarse_augment_batch(Xu, cfg.k_aug, cfg.delta, rng)
                flat = A.reshape(-1, A.shape[-1])
                # adversarial perturbations live in representation space
                # (identical to input space when tap_layer == 0)
                H_bar = self.model.tap_representation(flat)
                tap = self.model.tap_layer
                P_flat = self.model.predict(H_bar, start=tap)
                R, _ = augment.vat_perturbation_batch(
                    self.model, H_bar, P_flat, cfg.epsilon, cfg.xi, rng)
                tilde = H_bar + R
                P_tilde = self.model.predict(tilde, start=tap).reshape(
                    len(Xu), cfg.k_aug, -1)
                P_u = self.model.predict(Xu)
                guessed = propagator.guess_labels_batch(P_u, P_tilde, w)
                guessed_rep = np.repeat(guessed, cfg.k_aug, axis=0)
                H = np.concatenate([
                    self.model.tap_representation(Xl),
                    self.model.tap_representation(Xu),
                    tilde,
                ])
                Y = np.concatenate([Yl, guessed, guessed_rep])
                mask = np.zeros(len(H), dtype=bool)
                mask[: len(Xl)] = True
            else:
                H = self.model.tap_representation(Xl)
                Y = Yl
                mask = np.ones(len(H), dtype=bool)
            sup, unsup, _, _ = propagator.build_training_arrays(
                H, Y, mask, cfg.alpha, rng)
            train_step(self.model,
                       labeled=sup if len(sup[0]) else None,
                       unlabeled=unsup if len(unsup[0]) else None,
                       learning_rate=cfg.learning_rate,
                       lambda_u=cfg.lambda_u)

    # -- scoring + selection ------------------------------------------

    def _score_pool(self, rng):
        """Fresh-draw inconsistency + entropy scoring of every unlabeled
        sample. Returns ScoreRecords sorted by id."""
        cfg = self.config
        ids = sorted(self.pool.unlabeled)
        X = np.stack([self.pool.features[i] for i in ids])
        P_orig = self.model.predict(X)
        A = augment.coarse_augment_batch(X, cfg.k_aug, cfg.delta, rng)
        flat = A.reshape(-1, A.shape[-1])
        P_bar_flat = self.model.predict(flat)
        P_bar = P_bar_flat.reshape(len(ids), cfg.k_aug, -1)

        if cfg.disable_coarse:
            in_coa = np.zeros(len(ids))
        else:
            stacked = np.concatenate([P_orig[:, None, :], P_bar], axis=1)
            in_coa = stacked.var(axis=1).sum(axis=1)

        if cfg.disable_fine:
            in_fin = np.zeros(len(ids))
        else:
            H_bar = self.model.tap_representation(flat)
            tap = self.model.tap_layer
            R, _ = augment.vat_perturbation_batch(
                self.model, H_bar, P_bar_flat, cfg.epsilon, cfg.xi, rng)
            P_hat_flat = self.model.predict(H_bar + R, start=tap)
            in_fin = kl_rows(P_bar_flat, P_hat_flat).reshape(len(ids), cfg.k_aug).sum(axis=1)

        gamma = cfg.gamma
        if cfg.disable_coarse and not cfg.disable_fine:
            gamma = 0.0
        elif cfg.disable_fine and not cfg.disable_coarse:
            gamma = 1.0
        phi_coa = selector.percentiles(in_coa)
        phi_fin = selector.percentiles(in_fin)
        in_total = gamma * phi_coa + (1.0 - gamma) * phi_fin
        ent = selector.entropy_rows(P_orig)
        reps = self.model.tap_representation(X)
        return [
            selector.ScoreRecord(
                sample_id=ids[i], in_coa=float(in_coa[i]), in_fin=float(in_fin[i]),
                phi_coa=float(phi_coa[i]), phi_fin=float(phi_fin[i]),
                in_total=float(in_total[i]), entropy=float(ent[i]),
                representation=reps[i],
            )
            for i in range(len(ids))
        ]

    def _entropy_records(self):
        """Cheap records (entropy + representation only) for the baselines."""
        ids = sorted(self.pool.unlabeled)
        X = np.stack([self.pool.features[i] for i in ids])
        P = self.model.predict(X)
        ent = selector.entropy_rows(P)
        reps = self.model.tap_representation(X)
        return [
            selector.ScoreRecord(sample_id=ids[i], entropy=float(ent[i]),
                                 representation=reps[i])
            for i in range(len(ids))
        ]

    def _select_phase(self, rngs):
        cfg = self.config
        strategy = cfg.strategy
        records = None
        if strategy == "ideal":
            if cfg.disable_ranker and cfg.disable_reranker:
                # nothing left of the selector: collapse to the random
                # baseline on the same stream
                records = self._entropy_records()
                return baseline_select("random", records, cfg.budget,
                                       rngs["select"]), records
            if cfg.disable_ranker:
                records = self._entropy_records()
                n = len(records)
                for r in records:
                    r.in_total = 0.0
                selected = selector.select(records, n, cfg.budget,
                                           use_density=not cfg.disable_density)
                return selected, records
            records = self._score_pool(rngs["score"])
            if cfg.disable_reranker:
                ranked = sorted(records, key=lambda r: (-r.in_total, r.sample_id))
                return [r.sample_id for r in ranked[: cfg.budget]], records
            m = cfg.resolved_m_cand(len(records))
            selected = selector.select(records, m, cfg.budget,
                                       use_density=not cfg.disable_density)
            return selected, records
        records = self._entropy_records()
        labeled_reps = None
        if strategy == "coreset":
            labeled_ids = sorted(self.pool.labeled)
            labeled_reps = self.model.tap_representation(
                np.stack([self.pool.features[i] for i in labeled_ids]))
        selected = baseline_select(strategy, records, cfg.budget,
                                   rngs["select"], labeled_reps=labeled_reps)
        return selected, records

    # -- evaluation ----------------------------------------------------

    def accuracy(self):
        ds = self.test_data
        pred = self.model.predict(ds.features).argmax(axis=1)
        return float((pred == ds.labels).mean())

    # -- the cycle -----------------------------------------------------

    def run_cycle(self, t):
        cfg = self.config
        if self.pool.n_unlabeled < cfg.budget:
            raise ExhaustedPoolError(
                f"unlabeled pool {self.pool.n_unlabeled} < budget {cfg.budget}")
        rngs = self._cycle_rngs(t)
        self._train_phase(rngs["train"])
        t0 = time.perf_counter()
        selected, records = self._select_phase(rngs)
        select_ms = (time.perf_counter() - t0) * 1000.0
        for sid in selected:
            self.pool.labeled[sid] = self.oracle.query(sid)
            self.pool.unlabeled.discard(sid)
        self.pool.check()
        totals = [r.in_total for r in records] if records else []
        has_rank = cfg.strategy == "ideal" and not cfg.disable_ranker
        report = CycleReport(
            cycle=t,
            n_labeled=self.pool.n_labeled,
            accuracy=self.accuracy(),
            mean_in_total=float(np.mean(totals)) if has_rank and totals else None,
            max_in_total=float(np.max(totals)) if has_rank and totals else None,
            select_ms=select_ms,
            selected_ids=list(selected),
            strategy=cfg.strategy,
            seed=cfg.seed,
        )
        self.reports.append(report)
        return report

    def run(self):
        for t in range(self.config.cycles):
            if self.pool.n_unlabeled < self.config.budget:
                break  # exhausted pool: return the partial report stream
            self.run_cycle(t)
        if self.reports:
            # the loop's product is a model trained with the final pools, so
            # the last report reflects one more training pass over them
            final_rngs = self._cycle_rngs(len(self.reports))
            self._train_phase(final_rngs["train"])
            last = self.reports[-1]
            last.accuracy = self.accuracy()
        return self.reports


def run(config, dataset, test_data=None):
    """Run the full loop and return the per-cycle reports."""
    return ActiveLearningLoop(config, dataset, test_data=test_data).run()
