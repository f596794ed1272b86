"""
Services package for the mean dimension and entropy estimators
"""
from .system_service import DynamicalSystem, SystemService
from .solver_service import SolverService
from .bowen_service import BowenService
from .cover_service import CoverService
from .measure_service import InvariantMeasure, MeasureService
from .rate_service import RateService
from .verify_service import VerifyService
from .config_service import ConfigService
from .config_fingerprint_service import ConfigFingerprintService
from .experiment_job_service import ExperimentJobService
from .report_generator import ReportGenerator

__all__ = [
	'DynamicalSystem',
	'SystemService',
	'SolverService',
	'BowenService',
	'CoverService',
	'InvariantMeasure',
	'MeasureService',
	'RateService',
	'VerifyService',
	'ConfigService',
	'ConfigFingerprintService',
	'ExperimentJobService',
	'ReportGenerator',
]
