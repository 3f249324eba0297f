# Подсказка, когда эксперименту нужен не обученный ещё чекпоинт
MISSING_CHECKPOINT_HINT = (
    "train it first with `python main.py train --kind {kind} --out {path}` "
    "or rerun the experiment with --train-missing"
)

# Строка отчёта о числе параметров модели
PARAMETER_REPORT_LINE = "{kind:<10} computed={computed:>5}  published={published:>5}  discrepancy={discrepancy:+d}"

# Итог оценки одной схемы
EVALUATION_SUMMARY = (
    "{scheme}: mean sum-rate {rate:.4f} bps/Hz over {layouts} layouts "
    "(K={n_links}, overhead {symbols} symbols = {ratio})"
)

# Итог обучения
TRAINING_SUMMARY = """
kind:            {kind}
parameters:      {parameters}
iterations:      {iterations}
final val rate:  {rate:.4f} bps/Hz
elapsed:         {elapsed:.2f} s
checkpoint:      {path}
"""

# Описание чекпоинта для inspect-checkpoint
CHECKPOINT_SUMMARY = """
kind:         {kind}
layers:       {layers}
embed dim:    {embed_dim}
aggregation:  {aggregation}
max power:    {max_power} mW
parameters:   {parameters}
norm stats:   direct {direct_mean:.4e} +- {direct_std:.4e}, interference {interference_mean:.4e} +- {interference_std:.4e}
"""

# Строка отчёта проверки свойства
ORACLE_REPORT_LINE = "[{status}] {name:<40} instances={instances:<5} max deviation={deviation:.3e}  {detail}"

# Итоговая строка отчёта проверок
ORACLE_REPORT_FOOTER = "{passed}/{total} properties passed in {elapsed:.1f} s"
