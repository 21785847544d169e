"""Pipeline execution behind the service endpoints.

Each run_* function validates nothing itself (the schemas already did),
executes the mapped pipeline, writes machine-readable files into the
output directory, and returns a response model. All files are written
with sorted keys and repr floats, so identical configs produce byte
identical outputs.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .. import dataio, evaluation, stability_lab, synth, trainer
from ..model_core import ModelParams, ScorerMap, loss
from . import schemas


def _out_dir(configured: str) -> Path:
    path = Path(os.environ.get("SCORESEL_OUTPUT_DIR") or configured)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, indent=1)
        f.write("\n")


def _config_sources(model) -> dict:
    """default-vs-user provenance per field, nested."""
    out = {}
    for name in type(model).model_fields:
        value = getattr(model, name)
        if isinstance(value, schemas.StrictModel):
            out[name] = _config_sources(value)
        else:
            out[name] = "user" if name in model.model_fields_set else "default"
    return out


def to_train_config(section: schemas.TrainSection) -> trainer.TrainConfig:
    return trainer.TrainConfig(
        k=section.k,
        lambda1=section.lambda1,
        d=section.d,
        epochs=section.epochs,
        batch_size=section.batch_size,
        lr=section.lr,
        phi=ScorerMap(section.phi),
        seed=section.seed,
        shuffle=section.shuffle,
    )


def load_pipeline(cfg: schemas.RunConfig):
    """Load, split and (optionally) standardize the configured dataset."""
    ds = dataio.load_csv(
        cfg.dataset.path,
        has_header=cfg.dataset.has_header,
        label_column=cfg.dataset.label_column,
    )
    sp = dataio.split(ds, cfg.split.ratios, cfg.split.seed)
    if cfg.dataset.standardize:
        ds = dataio.standardize(ds, sp)
    return ds, sp


def run_train(cfg: schemas.RunConfig) -> schemas.TrainResponse:
    out = _out_dir(cfg.output_dir)
    ds, sp = load_pipeline(cfg)
    tc = to_train_config(cfg.train)
    report = trainer.train(ds, sp, tc)

    _write_json(out / "resolved_config.json", {
        "config": cfg.model_dump(),
        "sources": _config_sources(cfg),
    })
    dataio.save_split(sp, out / "split.json")
    report.final_params.save(out / "params_final.json")
    report.best_params.save(out / "params_best.json")
    with open(out / "report.jsonl", "w", encoding="utf-8") as f:
        for row in report.record_dicts():
            f.write(json.dumps(row, sort_keys=True) + "\n")

    last = report.records[-1] if report.records else None
    files = ["resolved_config.json", "split.json", "params_final.json",
             "params_best.json", "report.jsonl"]
    return schemas.TrainResponse(
        output_dir=str(out),
        files=files,
        best_epoch=report.best_epoch,
        final_train_total=last.train.total if last else float("nan"),
        final_val_total=(last.val.total if last and last.val else None),
        kept_idx=list(last.kept_idx) if last else [],
    )


def run_select(req: schemas.SelectRequest) -> schemas.SelectResponse:
    params = ModelParams.load(req.params_path)
    sel = evaluation.select_features(params, req.k)
    out_path = req.output_path
    if out_path is not None:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        # the on-disk form is a bare JSON index list
        with open(out_path, "w", encoding="utf-8") as f:
            json.dump(list(sel.kept_idx), f)
            f.write("\n")
    return schemas.SelectResponse(
        kept_idx=list(sel.kept_idx),
        scores=list(sel.scores),
        output_path=out_path,
    )


def run_eval(req: schemas.EvalRequest) -> schemas.EvalResponse:
    cfg = req.config
    out = _out_dir(cfg.output_dir)
    ds, sp = load_pipeline(cfg)
    params = ModelParams.load(req.params_path)
    k = cfg.train.k
    lam = cfg.train.lambda1

    metrics: dict = {
        "dataset": cfg.dataset.path,
        "k": k,
        "phi": params.phi.value,
        "recon_mse": None,
        "accuracy": None,
    }
    for name, idx in (("train", sp.train_idx), ("val", sp.val_idx), ("test", sp.test_idx)):
        if idx.size:
            lb = loss(params, ds.x[idx], k, lam)
            metrics[f"{name}_selec"] = lb.selec
            metrics[f"{name}_score"] = lb.score
            metrics[f"{name}_total"] = lb.total

    sel = evaluation.select_features(params, k)
    metrics["kept_idx"] = list(sel.kept_idx)
    if cfg.evaluate.ols:
        model = evaluation.ols_fit(ds, sp, sel, cfg.evaluate.ridge_eps)
        metrics["recon_mse"] = evaluation.ols_error(model, ds, sp, "test")
        metrics["recon_mse_train"] = evaluation.ols_error(model, ds, sp, "train")
    if cfg.evaluate.classify:
        if ds.labels is None:
            raise ValueError("classify requested but the dataset has no labels")
        cols = np.array(sel.kept_idx, dtype=np.int64)
        forest = evaluation.extratrees_fit(
            ds.x[sp.train_idx][:, cols],
            ds.labels[sp.train_idx],
            n_trees=cfg.evaluate.n_trees,
            seed=cfg.evaluate.trees_seed,
        )
        metrics["accuracy"] = evaluation.extratrees_accuracy(
            forest, ds.x[sp.test_idx][:, cols], ds.labels[sp.test_idx]
        )

    out_path = out / "metrics.json"
    _write_json(out_path, metrics)
    return schemas.EvalResponse(metrics=metrics, output_path=str(out_path))


def run_oracle(req: schemas.OracleRequest) -> schemas.OracleResponse:
    cfg = req.config
    out = _out_dir(cfg.output_dir)
    ds, sp = load_pipeline(cfg)
    k = req.k if req.k is not None else cfg.train.k
    best_idx, best_err = evaluation.brute_force_best_subset(
        ds, sp, k, cfg.evaluate.ridge_eps
    )
    out_path = out / "oracle.json"
    _write_json(out_path, {"k": k, "best_idx": list(best_idx), "best_err": best_err})
    return schemas.OracleResponse(
        best_idx=list(best_idx), best_err=best_err, output_path=str(out_path)
    )


def _report_response(report, out: Path) -> schemas.ReportResponse:
    seed = report.seeds[0] if report.seeds else 0
    stem = f"report_{report.kind}_seed{seed}"
    csv_path = out / f"{stem}.csv"
    json_path = out / f"{stem}.json"
    stability_lab.report_to_csv(report, csv_path)
    stability_lab.report_to_json(report, json_path)
    return schemas.ReportResponse(
        kind=report.kind,
        csv_path=str(csv_path),
        json_path=str(json_path),
        swept_values=[p.swept_value for p in report.sweep],
        error_diff=[p.error_diff for p in report.sweep],
        test_error=[p.test_error for p in report.sweep],
        summary=report.summary,
    )


def _sweep_split(ds, sp, req: schemas.SweepRequest):
    if req.train_subsample is None:
        return sp
    return dataio.subsample(ds, sp, req.train_subsample, req.sweep_seed)


def run_sweep_n(req: schemas.SweepRequest) -> schemas.ReportResponse:
    cfg = req.config
    ds, sp = load_pipeline(cfg)
    report = stability_lab.sweep_n(
        ds, sp, to_train_config(cfg.train), [int(v) for v in req.values], req.sweep_seed
    )
    return _report_response(report, _out_dir(cfg.output_dir))


def run_sweep_lambda(req: schemas.SweepRequest) -> schemas.ReportResponse:
    cfg = req.config
    ds, sp = load_pipeline(cfg)
    sp = _sweep_split(ds, sp, req)
    report = stability_lab.sweep_lambda1(
        ds, sp, to_train_config(cfg.train), list(req.values), req.sweep_seed
    )
    return _report_response(report, _out_dir(cfg.output_dir))


def run_sweep_k(req: schemas.SweepRequest) -> schemas.ReportResponse:
    cfg = req.config
    ds, sp = load_pipeline(cfg)
    sp = _sweep_split(ds, sp, req)
    report = stability_lab.sweep_k(
        ds, sp, to_train_config(cfg.train), [int(v) for v in req.values], req.sweep_seed
    )
    return _report_response(report, _out_dir(cfg.output_dir))


def run_beta(req: schemas.BetaRequest) -> schemas.ReportResponse:
    cfg = req.config
    ds, sp = load_pipeline(cfg)
    report = stability_lab.estimate_beta(
        ds, sp, to_train_config(cfg.train),
        [int(v) for v in req.n_values], req.deletions_per_n, req.sweep_seed,
    )
    return _report_response(report, _out_dir(cfg.output_dir))


def run_overlap(req: schemas.OverlapRequest) -> schemas.ReportResponse:
    cfg = req.config
    ds = dataio.load_csv(
        cfg.dataset.path,
        has_header=cfg.dataset.has_header,
        label_column=cfg.dataset.label_column,
    )
    report = stability_lab.selection_overlap(
        ds,
        to_train_config(cfg.train),
        req.seeds,
        ratios=cfg.split.ratios,
        standardize_data=cfg.dataset.standardize,
    )
    return _report_response(report, _out_dir(cfg.output_dir))


def run_gen_synth(req: schemas.GenSynthRequest) -> schemas.GenSynthResponse:
    out = _out_dir(req.output_dir)
    ds, meta = synth.gen_planted(
        n=req.n,
        m=req.m,
        n_informative=req.n_informative,
        noise=req.noise,
        seed=req.seed,
        n_classes=req.n_classes,
    )
    data_path = out / "data.csv"
    meta_path = out / "meta.json"
    synth.write_planted_csv(ds, meta, data_path, meta_path)
    return schemas.GenSynthResponse(
        data_path=str(data_path),
        meta_path=str(meta_path),
        planted_idx=list(meta.planted_idx),
    )
