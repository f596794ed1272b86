"""
Shared plumbing for the experiment commands
"""
from django.core.management.base import BaseCommand, CommandError

from dynamics.exceptions import ConfigError
from dynamics.models import ExperimentConfig, TaskStatus
from dynamics.services import ConfigFingerprintService, ConfigService, ExperimentJobService, ReportGenerator

EXIT_CHECK_FAILED = 1
EXIT_BAD_CONFIG = 2


class ExperimentCommand(BaseCommand):
    """Load a config, run its tasks, write the report files."""

    def add_arguments(self, parser):
        parser.add_argument('--jobs', type=int, default=None, help='Concurrent tasks (default DYNAMICS_MAX_JOBS)')
        parser.add_argument('--seed', type=int, default=None, help='Root seed, overrides the config')
        parser.add_argument('--out', default=None, help='Output directory, overrides the config')

    def load_config(self, path, options) -> ExperimentConfig:
        try:
            return ConfigService.load(path, seed=options['seed'], out=options['out'])
        except ConfigError as exc:
            raise CommandError(f'{path}: {exc}', returncode=EXIT_BAD_CONFIG)

    def run_config(self, config: ExperimentConfig, jobs=None):
        config_hash = ConfigFingerprintService.generate(config)
        self.stdout.write(f'Config {config.source} hash {config_hash[:12]} seed {config.seed}')

        results = ExperimentJobService.run(config, jobs=jobs)
        paths = ReportGenerator.write(config, results, config_hash)

        problems = []
        for result in results:
            line = f'  {result.task}: {result.status} ({len(result.rows)} rows)'
            if result.status == TaskStatus.COMPLETED and not result.check_failures:
                self.stdout.write(self.style.SUCCESS(line))
            elif result.status == TaskStatus.DEGRADED:
                self.stdout.write(self.style.WARNING(f'{line}: {result.error}'))
            else:
                detail = result.error or f'{result.check_failures} failed checks'
                self.stdout.write(self.style.ERROR(f'{line}: {detail}'))
                problems.append(f'{result.task} ({detail})')
        for path in paths:
            self.stdout.write(f'  wrote {path}')

        if problems:
            raise CommandError(f'Checks failed: {"; ".join(problems)}', returncode=EXIT_CHECK_FAILED)
        self.stdout.write(self.style.SUCCESS(f'Done: {len(results)} tasks, reports in {config.out}'))
        return results
