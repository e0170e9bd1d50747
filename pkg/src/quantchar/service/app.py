"""FastAPI service exposing the quantization-error toolkit.

Run with ``quantchar serve`` or ``uvicorn quantchar.service.app:app``.
All endpoints are stateless wrappers over the pure library functions, so
the service scales horizontally without coordination.
"""

from __future__ import annotations

from dataclasses import asdict

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from .. import characterization as ch
from .. import experiments as xp
from .. import measures as ms
from .. import metrics as mt
from .. import quanterror as qe
from ..geometry import covering_grid, verify_covering
from . import schemas as S

app = FastAPI(title="quantchar service", version=__version__)


@app.exception_handler(ValueError)
async def _value_error(request: Request, exc: ValueError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(ms.UnsupportedRepresentationError)
async def _unsupported(request: Request, exc: Exception):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/qerr", response_model=S.QErrResponse)
def qerr_endpoint(req: S.QErrRequest):
    value, method, se = qe.qerr(
        req.measure.to_measure(),
        req.grid,
        p=req.p,
        norm=S.parse_r(req.r),
        mc_samples=req.mc_samples,
        seed=req.seed,
    )
    return S.QErrResponse(value=value, method=method, std_error=se)


@app.post("/lloyd", response_model=S.LloydResponse)
def lloyd_endpoint(req: S.LloydRequest):
    grid, history = qe.lloyd(
        req.measure.to_measure(),
        req.n,
        iters=req.iters,
        seed=req.seed,
        init=req.init,
        pool_size=req.pool_size,
    )
    distinct = np.unique(grid, axis=0).shape[0]
    return S.LloydResponse(
        grid=grid.tolist(),
        distortion=history[-1],
        iterations=max(len(history) - 1, 0),
        distinct_points=distinct,
    )


@app.post("/qdist", response_model=S.QDistResponse)
def qdist_endpoint(req: S.QDistRequest):
    rep = mt.qdist(
        req.mu.to_measure(),
        req.nu.to_measure(),
        N=req.n,
        p=req.p,
        norm=S.parse_r(req.r),
        box=req.box,
        restarts=req.restarts,
        seed=req.seed,
        pitch=req.pitch,
        mc_samples=req.mc_samples,
    )
    return S.QDistResponse(
        lower_bound=rep.lower_bound,
        argmax_grid=rep.argmax_grid.tolist(),
        evaluations=rep.evaluations,
        search_box=rep.search_box,
        converged_restarts=rep.converged_restarts,
        pitch=rep.pitch,
    )


@app.post("/wasserstein", response_model=S.TransportResponse)
def wasserstein_endpoint(req: S.WassersteinRequest):
    value = mt.wasserstein_1d(req.mu.to_measure(), req.nu.to_measure(), req.p)
    return S.TransportResponse(value=value, plan_kind="quantile_1d")


@app.post("/wasserstein/assignment", response_model=S.TransportResponse)
def assignment_endpoint(req: S.AssignmentRequest):
    value = mt.wasserstein_assignment(req.xs, req.ys, req.p, S.parse_r(req.r))
    return S.TransportResponse(value=value, plan_kind="assignment")


@app.post("/covering", response_model=S.CoveringResponse)
def covering_endpoint(req: S.CoveringRequest):
    spec = S.parse_r(req.r)
    grid = covering_grid(req.dim, spec)
    cert = verify_covering(grid, spec, req.samples, req.seed)
    return S.CoveringResponse(
        centers=cert.centers.tolist(),
        r=S.r_to_wire(cert.r),
        max_min_distance=cert.max_min_distance,
        valid=cert.valid,
    )


@app.post("/mollify", response_model=S.MollifyResponse)
def mollify_endpoint(req: S.MollifyRequest):
    mu = req.measure.to_measure()
    norm = S.parse_r(req.r)
    spec = ch.make_mollifier(ms.dimension(mu), req.p, norm, req.eps)
    handle = ch.efunction(
        mu, spec.base_grid.shape[0], req.p, norm, mc_samples=req.mc_samples, seed=req.seed
    )
    rows = [(x, ch.mollified_density(handle, spec, x)) for x in req.xs]
    return S.MollifyResponse(rows=rows, c_phi=spec.c_phi)


@app.post("/cdf-extract", response_model=S.CdfExtractResponse)
def cdf_extract_endpoint(req: S.CdfExtractRequest):
    mu = req.measure.to_measure()
    handle = ch.efunction(mu, 1, 1.0, mc_samples=req.mc_samples, seed=req.seed)
    rows = [(x, ch.cdf_from_e11(handle, x, req.h)) for x in req.xs]
    return S.CdfExtractResponse(rows=rows)


def _experiment_response(report: xp.ExperimentReport) -> S.ExperimentResponse:
    return S.ExperimentResponse(
        experiment=report.name,
        columns=list(report.columns),
        rows=[asdict(r) for r in report.rows],
        assertions=[S.AssertionModel(name=n, passed=ok, detail=d) for n, ok, d in report.assertions],
        passed=report.passed,
        config=report.config,
    )


@app.post("/experiments/counterexample", response_model=S.ExperimentResponse)
def counterexample_endpoint(req: S.CounterexampleRequest):
    report = xp.run_counterexample(
        N=req.N,
        n_max=req.n_max,
        grid_budget=req.grid_budget,
        seed=req.seed,
        lattice_half_width=req.lattice_half_width,
        pitch=req.pitch,
    )
    return _experiment_response(report)


@app.post("/experiments/grid-law", response_model=S.ExperimentResponse)
def grid_law_endpoint(req: S.GridLawRequest):
    report = xp.run_grid_law(
        family=req.family,
        N_list=req.Ns,
        lloyd_iters=req.lloyd_iters,
        pool_size=req.pool_size,
        seed=req.seed,
    )
    return _experiment_response(report)


@app.post("/experiments/equivalence", response_model=S.ExperimentResponse)
def equivalence_endpoint(req: S.EquivalenceRequest):
    report = xp.run_equivalence(
        family=req.family,
        N=req.N,
        p=req.p,
        n_list=req.n_list,
        lattice_half_width=req.lattice_half_width,
        pitch=req.pitch,
    )
    return _experiment_response(report)
