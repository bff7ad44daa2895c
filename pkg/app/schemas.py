"""Experiment config and report schemas."""
import json

import stringcase
from marshmallow import RAISE, Schema, fields, validate

from bgk.verification import (
    BoundReport,
    ConvergenceReport,
    EntropyReport,
    OrderReport,
    ResidualReport,
)

REPORT_SCHEMA_VERSION = 1

PROFILES = ("riemann", "bump", "gaussian", "from-file")
CHECKS = ("sign", "linf", "defect", "defect_budget", "contraction", "comparison", "entropy", "decay")


class StrictSchema(Schema):
    class Meta:
        unknown = RAISE


class CamelCaseSchema(Schema):
    # https://marshmallow.readthedocs.io/en/latest/examples.html#inflection-camel-casing-keys
    def on_bind_field(self, field_name, field_obj):
        field_obj.data_key = stringcase.camelcase((field_obj.data_key or field_name))


# Experiment files


class ModelSection(StrictSchema):
    flux = fields.String(required=True)
    forcing = fields.String(load_default="zero")
    noise = fields.String(load_default="zero")


class GridSection(StrictSchema):
    x_min = fields.Float(required=True)
    x_max = fields.Float(required=True)
    nx = fields.Integer(required=True, validate=validate.Range(min=1))
    nv = fields.Integer(load_default=64, validate=validate.Range(min=6))
    v_max = fields.Float(load_default=None, allow_none=True, validate=validate.Range(min=0, min_inclusive=False))


class SolverSection(StrictSchema):
    eps = fields.Float(required=True, validate=validate.Range(min=0, min_inclusive=False))
    t_final = fields.Float(required=True, validate=validate.Range(min=0))
    dt = fields.Float(load_default=None, allow_none=True, validate=validate.Range(min=0, min_inclusive=False))
    cfl = fields.Float(load_default=0.9, validate=validate.Range(min=0, max=1, min_inclusive=False))
    record_every = fields.Integer(load_default=1, validate=validate.Range(min=1))
    char_substeps = fields.Integer(load_default=4, validate=validate.Range(min=1))
    splitting = fields.String(load_default="lie", validate=validate.OneOf(["lie", "strang"]))
    boundary = fields.String(load_default="zero_inflow", validate=validate.OneOf(["zero_inflow", "extrapolate"]))


class InitialSection(StrictSchema):
    profile = fields.String(required=True, validate=validate.OneOf(PROFILES))
    left = fields.Float(load_default=1.0)
    right = fields.Float(load_default=0.0)
    x0 = fields.Float(load_default=0.0)
    center = fields.Float(load_default=0.0)
    width = fields.Float(load_default=0.25, validate=validate.Range(min=0, min_inclusive=False))
    height = fields.Float(load_default=1.0)
    path = fields.String(load_default=None, allow_none=True)


class StochasticSection(StrictSchema):
    n_paths = fields.Integer(load_default=0, validate=validate.Range(min=0))
    seed = fields.Integer(load_default=0, validate=validate.Range(min=0))
    scheme = fields.String(load_default="shift", validate=validate.OneOf(["shift", "direct"]))
    mode = fields.String(load_default="conservative", validate=validate.OneOf(["conservative", "nearest"]))


class ChecksSection(StrictSchema):
    run = fields.List(fields.String(validate=validate.OneOf(CHECKS)), load_default=list)
    comparison_offset = fields.Float(load_default=0.1, validate=validate.Range(min=0, min_inclusive=False))


class ExperimentSchema(StrictSchema):
    model = fields.Nested(ModelSection, required=True)
    grid = fields.Nested(GridSection, required=True)
    solver = fields.Nested(SolverSection, required=True)
    initial = fields.Nested(InitialSection, required=True)
    stochastic = fields.Nested(StochasticSection, load_default=lambda: StochasticSection().load({}))
    checks = fields.Nested(ChecksSection, load_default=lambda: ChecksSection().load({}))


# Reports


class BoundReportSchema(CamelCaseSchema):
    name = fields.String()
    claimed = fields.Float()
    measured = fields.Float()
    slack = fields.Float()
    passed = fields.Boolean()
    times = fields.List(fields.Float())
    bound = fields.List(fields.Float())
    values = fields.List(fields.Float())
    details = fields.Dict()


class OrderReportSchema(CamelCaseSchema):
    name = fields.String()
    max_violation = fields.Float()
    tolerance = fields.Float()
    passed = fields.Boolean()
    n_snapshots = fields.Integer()


class EntropyReportSchema(CamelCaseSchema):
    constants = fields.List(fields.Float())
    residuals = fields.List(fields.List(fields.Float()))
    min_residual = fields.Float()
    tol = fields.Float()
    passed = fields.Boolean()
    battery_version = fields.Integer()


class ResidualReportSchema(CamelCaseSchema):
    name = fields.String()
    residuals = fields.List(fields.Float())
    max_abs = fields.Float()
    tol = fields.Float()
    passed = fields.Boolean()


class ConvergenceRowSchema(CamelCaseSchema):
    nx = fields.Integer()
    eps = fields.Float()
    dx = fields.Float()
    dt = fields.Float()
    error = fields.Float()
    ratio = fields.Float(allow_nan=True)


class ConvergenceReportSchema(CamelCaseSchema):
    rows = fields.Method("dump_rows")
    monotone = fields.Boolean()
    passed = fields.Boolean()

    def dump_rows(self, report):
        records = report.table.astype(object).where(report.table.notna(), None).to_dict(orient="records")
        return ConvergenceRowSchema(many=True).dump(records)


class ManifestSchema(CamelCaseSchema):
    schema = fields.Integer()
    version = fields.String()
    config_file = fields.String()
    config_sha256 = fields.String()
    overrides = fields.List(fields.String())
    seed = fields.Integer(allow_none=True)
    experiment = fields.Dict()
    artifacts = fields.List(fields.String())


_REPORT_SCHEMAS = {
    BoundReport: BoundReportSchema,
    OrderReport: OrderReportSchema,
    EntropyReport: EntropyReportSchema,
    ResidualReport: ResidualReportSchema,
    ConvergenceReport: ConvergenceReportSchema,
}


def dump_report(check: str, report, passed: bool, suite: str = None) -> str:
    """Versioned JSON document for one check, with sorted keys so reruns are byte-identical."""
    body = {
        "schema": REPORT_SCHEMA_VERSION,
        "check": check,
        "passed": bool(passed),
        "report": _REPORT_SCHEMAS[type(report)]().dump(report),
    }
    if suite is not None:
        body["suite"] = suite
    return json.dumps(body, indent=2, sort_keys=True)


def dump_manifest(manifest: dict) -> str:
    return json.dumps(ManifestSchema().dump({"schema": REPORT_SCHEMA_VERSION, **manifest}), indent=2, sort_keys=True)
