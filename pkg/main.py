#!/usr/bin/env python3
# main.py
import argparse
import re
import sys
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

# Добавляем пути
sys.path.append(str(Path(__file__).parent))

from config import DATA_CONFIG, FIT_CONFIG, INFERENCE_CONFIG, OUTPUT_DIR, PREDICTION_CONFIG, REPORT_CONFIG
from custom.distribution import CustomDistribution, assemble
from dataset.loader import load_table
from dataset.response import normalize_response
from distributions.builtin import get_distribution, list_distributions
from errors import INPUT_ERRORS, ConfigError, DistributionError, ParmsurvError
from model.design import parse_refgrp
from model.fit import FitOptions, FitResult, fit_model
from model.inference import compare_models
from model.likelihood import build_context
from model.predict import CURVE_COLUMNS, curve_records, predict_at, rows_from_table, trajectories
from model.spec import ModelSpec, parse_anc, parse_assignments
from ui.components import UIComponents
from ui.plots import emit_plots, render_plots
from ui.report import RunReport, StratumSummary, criteria_line, render_report
from ui.storage import ResultStorage, to_jsonable

TRUE_WORDS = {"yes", "y", "t", "true", "1", "on"}
FALSE_WORDS = {"no", "n", "f", "false", "0", "off"}
CUSTOM_ROLES = ("density", "hazard", "survival", "log_density", "log_hazard", "log_survival")


def parse_flag(text: str) -> bool:
    """yes/no/t/true/1 и их отрицания"""
    word = str(text).strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise argparse.ArgumentTypeError(f"ожидается yes/no, получено {text!r}")


def split_names(text: Optional[str]) -> Tuple[str, ...]:
    """ "age sex" или "age, sex" -> ("age", "sex") """
    if not text:
        return ()
    return tuple(name for name in re.split(r"[\s,]+", text.strip()) if name)


@dataclass(frozen=True)
class RunConfig:
    """Параметры запуска"""
    data: Optional[str] = None
    t1: Optional[str] = None
    t2: Optional[str] = None
    censor: Optional[str] = None
    censval: Optional[str] = None
    covars: Tuple[str, ...] = ()
    anc: Optional[str] = None
    class_cov: Tuple[str, ...] = ()
    refgrp: Optional[str] = None
    strata: Tuple[str, ...] = ()
    weight: Optional[str] = None
    dist: Optional[str] = None
    density: Optional[str] = None
    hazard: Optional[str] = None
    survival: Optional[str] = None
    log_density: Optional[str] = None
    log_hazard: Optional[str] = None
    log_survival: Optional[str] = None
    custom_prep: str = ""
    param_anc: Tuple[str, ...] = ()
    location: str = "beta"
    log_transf_param: Tuple[str, ...] = ()
    lower: Dict[str, float] = field(default_factory=dict)
    upper: Dict[str, float] = field(default_factory=dict)
    init: Dict[str, float] = field(default_factory=dict)
    robust: bool = INFERENCE_CONFIG["robust"]
    alpha: float = INFERENCE_CONFIG["alpha"]
    log_result: bool = INFERENCE_CONFIG["log_result"]
    algorithm: str = FIT_CONFIG["algorithm"]
    max_iter: int = FIT_CONFIG["max_iter"]
    gtol: float = FIT_CONFIG["gtol"]
    verbosity: int = FIT_CONFIG["verbosity"]
    pred: Optional[str] = None
    pred_max_time: Optional[float] = None
    pred_plot_cl: bool = PREDICTION_CONFIG["plot_cl"]
    outdir: str = str(OUTPUT_DIR)
    missing: Tuple[str, ...] = tuple(DATA_CONFIG["missing_tokens"])
    compare: Tuple[str, ...] = ()
    quiet: bool = False
    list_dists: bool = False

    def __post_init__(self):
        if self.list_dists:
            return
        if not self.data:
            raise ConfigError("Не указан набор данных (--data)")
        if not self.t1:
            raise ConfigError("Не указан столбец времени (--t1)")
        if (self.t2 is None) == (self.censor is None):
            raise ConfigError("Нужно указать ровно один из --t2 или --censor")
        if self.is_custom and self.dist:
            raise ConfigError("--dist нельзя сочетать с пользовательскими функциями")
        if not self.is_custom and not self.dist:
            raise ConfigError("Укажите --dist или пользовательские функции (--density, --hazard, ...)")
        if self.pred_max_time is not None and not self.pred:
            raise ConfigError("--pred-max-time требует --pred")
        if self.pred_max_time is not None and not self.pred_max_time > 0:
            raise ConfigError(f"--pred-max-time должно быть положительным: {self.pred_max_time}")
        if self.compare and self.is_custom:
            raise ConfigError("--compare доступно только для встроенных распределений")

    @property
    def is_custom(self) -> bool:
        return any(getattr(self, role) is not None for role in CUSTOM_ROLES)


class _Parser(argparse.ArgumentParser):
    """ArgumentParser, который сообщает об ошибках через ConfigError"""

    def error(self, message):
        raise ConfigError(message, self.format_usage())


def _add(parser: argparse.ArgumentParser, name: str, **kwargs):
    flags = [f"--{name}"]
    if "_" in name:
        flags.append(f"--{name.replace('_', '-')}")
    parser.add_argument(*flags, dest=name, **kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="parmsurv",
        description="Параметрическая регрессия выживаемости с цензурированием",
    )
    data = parser.add_argument_group("данные")
    _add(data, "data", help="CSV с наблюдениями")
    _add(data, "t1", help="время (или левая граница интервала)")
    _add(data, "t2", help="правая граница интервала")
    _add(data, "censor", help="индикатор цензурирования")
    _add(data, "censval", help=f"значение цензурирования (по умолчанию {DATA_CONFIG['censval']})")
    _add(data, "weight", help="столбец весов")
    _add(data, "strata", default="", help="столбцы страт")
    _add(data, "missing", default=None, help="обозначения пропусков через пробел")

    model = parser.add_argument_group("модель")
    _add(model, "dist", help="встроенное распределение (--list-dists)")
    _add(model, "covars", default="", help="ковариаты параметра положения")
    _add(model, "anc", help='ковариаты вспомогательных параметров: "sigma(age sex), lambda(sex)"')
    _add(model, "class_cov", default="", help="категориальные ковариаты")
    _add(model, "refgrp", help="референсные уровни категориальных ковариат через запятую")
    for role in CUSTOM_ROLES:
        _add(model, role, help=f"пользовательская функция {role}")
    _add(model, "custom_prep", default="", help="вспомогательные присваивания: a = ...; b = ...")
    _add(model, "param_anc", default="", help="вспомогательные параметры пользовательского распределения")
    _add(model, "location", default="beta", help="параметр положения пользовательского распределения")
    _add(model, "log_transf_param", default="", help="параметры с log-связью")
    _add(model, "lower", help='нижние границы: "sigma=0.1"')
    _add(model, "upper", help="верхние границы")
    _add(model, "init", help='начальные значения: "sigma=1 beta:age=0"')

    fit = parser.add_argument_group("оценивание")
    _add(fit, "robust", type=parse_flag, default=INFERENCE_CONFIG["robust"], help="сэндвич-оценка (yes/no)")
    _add(fit, "alpha", type=float, default=INFERENCE_CONFIG["alpha"])
    _add(fit, "log_result", type=parse_flag, default=INFERENCE_CONFIG["log_result"])
    _add(fit, "algorithm", default=FIT_CONFIG["algorithm"], help="newton, quanew, trureg")
    _add(fit, "max_iter", type=int, default=FIT_CONFIG["max_iter"])
    _add(fit, "gtol", type=float, default=FIT_CONFIG["gtol"])
    fit.add_argument("--verbosity", "--nlp-print", "--nlp_print", dest="verbosity", type=int,
                     default=FIT_CONFIG["verbosity"], help="подробность вывода оптимизатора 0..5")
    _add(fit, "compare", default="", help='сравнить распределения: "exp weibull gengamma"')

    pred = parser.add_argument_group("прогноз и вывод")
    _add(pred, "pred", help="CSV строк прогноза со столбцом time")
    _add(pred, "pred_max_time", type=float, help="правый конец кривых прогноза")
    _add(pred, "pred_plot_cl", type=parse_flag, default=PREDICTION_CONFIG["plot_cl"])
    _add(pred, "outdir", default=str(OUTPUT_DIR), help="каталог результатов (PARMSURV_OUTDIR)")
    parser.add_argument("--quiet", action="store_true", help="не печатать таблицы")
    parser.add_argument("--list-dists", "--list_dists", dest="list_dists", action="store_true")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return RunConfig(
            data=ns.data,
            t1=ns.t1,
            t2=ns.t2,
            censor=ns.censor,
            censval=ns.censval,
            covars=split_names(ns.covars),
            anc=ns.anc,
            class_cov=split_names(ns.class_cov),
            refgrp=ns.refgrp,
            strata=split_names(ns.strata),
            weight=ns.weight,
            dist=ns.dist,
            density=ns.density,
            hazard=ns.hazard,
            survival=ns.survival,
            log_density=ns.log_density,
            log_hazard=ns.log_hazard,
            log_survival=ns.log_survival,
            custom_prep=ns.custom_prep,
            param_anc=split_names(ns.param_anc),
            location=ns.location,
            log_transf_param=split_names(ns.log_transf_param),
            lower=parse_assignments(ns.lower),
            upper=parse_assignments(ns.upper),
            init=parse_assignments(ns.init),
            robust=ns.robust,
            alpha=ns.alpha,
            log_result=ns.log_result,
            algorithm=ns.algorithm,
            max_iter=ns.max_iter,
            gtol=ns.gtol,
            verbosity=ns.verbosity,
            pred=ns.pred,
            pred_max_time=ns.pred_max_time,
            pred_plot_cl=ns.pred_plot_cl,
            outdir=ns.outdir,
            missing=tuple(ns.missing.split(" ")) if ns.missing is not None else tuple(DATA_CONFIG["missing_tokens"]),
            compare=split_names(ns.compare),
            quiet=ns.quiet,
            list_dists=ns.list_dists,
        )
    except ConfigError as e:
        raise ConfigError(str(e), parser.format_usage()) from None


def build_distribution(config: RunConfig):
    if config.is_custom:
        return assemble(CustomDistribution(
            density=config.density,
            hazard=config.hazard,
            survival=config.survival,
            log_density=config.log_density,
            log_hazard=config.log_hazard,
            log_survival=config.log_survival,
            prep=config.custom_prep or "",
            param_anc=config.param_anc,
            location=config.location,
            log_transf_param=config.log_transf_param,
            lower=tuple(config.lower.items()),
        ))
    try:
        return get_distribution(config.dist)
    except DistributionError as e:
        raise ConfigError(str(e)) from None


def build_spec(config: RunConfig, distribution) -> ModelSpec:
    return ModelSpec(
        distribution=distribution,
        covars=config.covars,
        anc=tuple((param, tuple(names)) for param, names in parse_anc(config.anc)),
        class_cov=config.class_cov,
        refgrp=tuple(parse_refgrp(config.refgrp)),
        log_transf_param=config.log_transf_param,
        init=config.init,
        lower=config.lower,
        upper=config.upper,
        alpha=config.alpha,
        robust=config.robust,
        log_result=config.log_result,
    )


def _comparison_spec(spec: ModelSpec, name: str) -> ModelSpec:
    """Та же модель с другим встроенным распределением; anc и границы только для общих параметров"""
    try:
        distribution = get_distribution(name)
    except DistributionError as e:
        raise ConfigError(str(e)) from None
    names = distribution.names
    return replace(
        spec,
        distribution=distribution,
        anc=tuple((p, covs) for p, covs in spec.anc if p in names),
        init={k: v for k, v in spec.init.items() if k.split(":")[0] in names},
        lower={k: v for k, v in spec.lower.items() if k in names},
        upper={k: v for k, v in spec.upper.items() if k in names},
    )


def _report_files(config: RunConfig) -> List[str]:
    files = [REPORT_CONFIG["report_file"], REPORT_CONFIG["results_file"]]
    if config.pred_max_time is not None:
        files += [REPORT_CONFIG["curves_file"], REPORT_CONFIG["surv_plot_file"], REPORT_CONFIG["haz_plot_file"]]
    return files


def _strata_summaries(fit: FitResult) -> List[StratumSummary]:
    return [
        StratumSummary(s.stratum, s.n, s.rows, s.loglik, s.aic, s.bic, s.convergence)
        for s in fit.strata
    ]


def _config_echo(config: RunConfig) -> Dict[str, Any]:
    echo = asdict(config)
    echo.pop("quiet")
    echo.pop("list_dists")
    return echo


def run(
    config: RunConfig,
    printer: Optional[Callable[[str], None]] = None,
) -> Tuple[RunReport, int]:
    """
    Подгонка, вывод, прогноз и запись результатов. Файлы пишутся только после
    того, как все вычисления завершены.
    """
    UIComponents.quiet = config.quiet
    printer = printer or UIComponents.print_line
    notes: List[str] = []

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")

        UIComponents.print_status("start", f"Чтение данных: {config.data}")
        table = load_table(config.data, config.missing)
        observations = normalize_response(
            table,
            config.t1,
            t2col=config.t2,
            censorcol=config.censor,
            censval=config.censval,
            weightcol=config.weight,
            stratacols=config.strata,
        )
        spec = build_spec(config, build_distribution(config))
        ctx = build_context(spec, observations)
        options = FitOptions(
            algorithm=config.algorithm,
            max_iter=config.max_iter,
            gtol=config.gtol,
            verbosity=config.verbosity,
        )

        UIComponents.print_status("start", f"Подгонка: {spec.distribution.label}, n = {ctx.n}, k = {ctx.layout.k}")
        fit = fit_model(ctx, options, printer)

        predictions = []
        curves = []
        if config.pred:
            pred_table = load_table(config.pred, config.missing)
            rows = rows_from_table(pred_table, spec.all_covariates)
            predictions = predict_at(fit, rows)
            if config.pred_max_time is not None:
                curves = trajectories(fit, rows, config.pred_max_time, bands=config.pred_plot_cl)

        comparison = []
        if config.compare:
            fits = [fit]
            for name in config.compare:
                other = build_context(_comparison_spec(spec, name), observations)
                if other.distribution.id == spec.distribution.id:
                    continue
                UIComponents.print_status("start", f"Сравнение: {other.distribution.label}")
                fits.append(fit_model(other, options, printer))
            comparison = compare_models(fits)

    for warning in caught:
        notes.append(str(warning.message))
    if fit.inference_error:
        notes.append(fit.inference_error)
    if fit.pooled_log_labels:
        notes.append(
            f"Интервалы {', '.join(fit.pooled_log_labels)} объединены по стратам на исходной шкале: "
            "оценка ± z·SE без логарифмического преобразования"
        )

    report = RunReport(
        title=f"{spec.distribution.label} survival model",
        n_input=observations.n_input,
        n_used=ctx.n,
        rows=fit.rows,
        loglik=fit.loglik,
        aic=fit.aic,
        bic=fit.bic,
        convergence=fit.convergence,
        deletions=ctx.observations.deletion_log,
        log_rows=fit.log_rows,
        predictions=predictions,
        strata=_strata_summaries(fit),
        comparison=comparison,
        manifest=_report_files(config),
        notes=notes,
        covariance_kind="sandwich" if config.robust else "regular",
        alpha=config.alpha,
    )

    # все документы собираются до первой записи на диск
    report_text = render_report(report)
    results = to_jsonable({
        "config": _config_echo(config),
        "run": report.to_dict(),
        "fit": fit.to_dict(),
        "predictions": [record.to_dict() for record in predictions],
        "comparison": [row.to_dict() for row in comparison],
    })
    curve_rows = list(curve_records(curves)) if curves else []
    plots = render_plots(curves, bands=config.pred_plot_cl) if curves else {}

    storage = ResultStorage(config.outdir)
    storage.save_text(report_text)
    storage.save_json(results)
    if curves:
        storage.save_csv(curve_rows, CURVE_COLUMNS)
        for path in emit_plots(curves, config.outdir, documents=plots):
            storage.register(path)

    UIComponents.print_estimates("Parameter Estimates", fit.rows)
    UIComponents.print_table("Fit Statistics", criteria_line(fit.loglik, fit.aic, fit.bic))
    UIComponents.print_predictions(predictions)
    UIComponents.print_comparison(comparison)
    UIComponents.print_status("info", f"Результаты: {storage.output_dir}")
    if report.exit_code == 0:
        UIComponents.print_status("ok", "Сходимость достигнута")
    else:
        UIComponents.print_status("warning", f"Нет сходимости: {fit.convergence.message}")
    return report, report.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Главная функция"""
    try:
        config = parse_args(argv)
        if config.list_dists:
            UIComponents.print_distributions(list_distributions())
            return 0
        _, code = run(config)
        return code
    except INPUT_ERRORS as e:
        UIComponents.print_status("error", f"Ошибка входных данных: {e}")
        usage = getattr(e, "usage", "")
        if usage:
            print(usage, file=sys.stderr)
        return 1
    except ParmsurvError as e:
        UIComponents.print_status("error", f"Ошибка вычисления: {e}")
        return 1
    except OSError as e:
        UIComponents.print_status("error", f"Ошибка записи результатов: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
