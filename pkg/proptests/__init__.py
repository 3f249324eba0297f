from .oracles import PROPERTIES, OracleReport, format_report, run_all, run_property, write_report_csv

__all__ = ["OracleReport", "PROPERTIES", "run_property", "run_all", "format_report", "write_report_csv"]
