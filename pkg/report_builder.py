import csv
import io
import json
import logging
from typing import Any, Dict, Iterable, Optional, Sequence

from discrepancy import DiscrepancyEstimate, ScalingResult

logger = logging.getLogger(__name__)


def _number(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    return value


def _to_json(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


class ReportBuilder:
    """Build the CSV and JSON payloads written by the command line.

    Payloads are pure functions of their inputs: floats are written with
    repr, keys sorted, lines end in LF and nothing time-dependent is included.
    """

    SCALING_COLUMNS = ("generator", "N_target", "N_actual", "rep", "l2", "stderr", "trunc")

    @staticmethod
    def build_rows_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]],
                       summary: Optional[Dict[str, Any]] = None) -> str:
        """Header, one line per row, then ``# key=value`` summary lines"""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_number(v) for v in row])
        for key in sorted(summary or {}):
            buffer.write(f"# {key}={_number(summary[key])}\n")
        return buffer.getvalue()

    @staticmethod
    def build_scaling_csv(result: ScalingResult) -> str:
        """Scaling table with a trailing ``slope,slope_stderr`` footer row"""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(ReportBuilder.SCALING_COLUMNS)
        for row in result.rows:
            writer.writerow([_number(v) for v in row])
        writer.writerow(("slope", "slope_stderr"))
        writer.writerow((repr(result.slope), repr(result.slope_stderr)))
        return buffer.getvalue()

    @staticmethod
    def build_estimate_json(estimate: DiscrepancyEstimate, config: Dict[str, Any], seed: int,
                            audit: Optional[Dict[str, Any]] = None) -> str:
        payload = {
            "value": estimate.value,
            "stat_stderr": estimate.stat_stderr,
            "trunc_bound": estimate.trunc_bound,
            "method": estimate.method,
            "config": config,
            "seed": seed,
        }
        if audit is not None:
            payload["audit"] = audit
        return _to_json(payload)

    @staticmethod
    def build_audit(spectral: DiscrepancyEstimate, direct: DiscrepancyEstimate,
                    agrees: bool) -> Dict[str, Any]:
        ratio = spectral.value / direct.value if direct.value > 0 else None
        return {
            "direct": direct.value,
            "direct_stderr": direct.stat_stderr,
            "ratio": ratio,
            "agrees": agrees,
        }

    @staticmethod
    def build_validation_json(results: Sequence[Dict[str, Any]]) -> str:
        return _to_json({
            "suites": list(results),
            "pass": all(r["pass"] for r in results),
        })
