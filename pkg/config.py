# config.py
import os
from pathlib import Path

# Пути к директориям
BASE_DIR = Path(__file__).parent.resolve()
DATA_DIR = BASE_DIR / "data"
OUTPUT_DIR = Path(os.environ.get("PARMSURV_OUTDIR", BASE_DIR / "output"))

# Чтение данных
DATA_CONFIG = {
    "missing_tokens": ["", "."],
    "censval": 0,
}

# Настройки оптимизации
FIT_CONFIG = {
    "algorithm": "newton",  # newton, quanew, trureg
    "max_iter": 200,
    "gtol": 1e-6,
    "verbosity": 0,  # 0..5
    "armijo": 1e-4,
    "max_halvings": 30,
    "nonzero_init": 0.5,
    "positive_init": 1.0,
}

# Настройки вывода оценок
INFERENCE_CONFIG = {
    "alpha": 0.05,
    "robust": False,
    "log_result": False,
    "p_threshold": 1e-4,
}

# Настройки прогноза
PREDICTION_CONFIG = {
    "n_ticks": 100,
    "plot_cl": True,
}

# Настройки отчета
REPORT_CONFIG = {
    "estimate_decimals": 5,
    "t_decimals": 2,
    "p_decimals": 4,
    "criteria_decimals": 3,
    "prediction_decimals": 3,
    "report_file": "report.txt",
    "results_file": "results.json",
    "curves_file": "curves.csv",
    "surv_plot_file": "surv.svg",
    "haz_plot_file": "haz.svg",
}

# Настройки SVG графиков
PLOT_CONFIG = {
    "width": 800,
    "height": 500,
    "n_axis_ticks": 10,
    "margin": {"left": 70, "right": 30, "top": 40, "bottom": 60},
    "colors": ["#61afef", "#e06c75", "#98c379", "#d19a66", "#c678dd", "#56b6c2", "#abb2bf"],
    "band_opacity": 0.2,
}
