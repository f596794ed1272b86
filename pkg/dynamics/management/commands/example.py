"""
Management command to reproduce the interval shift example table
"""
from django.core.management.base import CommandError

from dynamics.exceptions import ConfigError
from dynamics.models import TaskKind
from dynamics.services import ConfigService

from ._experiment import EXIT_BAD_CONFIG, ExperimentCommand


class Command(ExperimentCommand):
    help = 'Reproduce the Brin-Katok sandwich and mean dimension slope on [0,1]^Z'

    def add_arguments(self, parser):
        parser.add_argument('--eps-ladder', type=float, nargs='+', default=None, help='Scales to tabulate')
        parser.add_argument('--config', default=None, help='Config to take the system and budgets from')
        super().add_arguments(parser)

    def handle(self, *args, **options):
        eps_ladder = options['eps_ladder']
        try:
            if options['config']:
                base = self.load_config(options['config'], options)
                data = dict(base.raw, tasks=[TaskKind.EXAMPLE])
                if eps_ladder:
                    data['eps_ladder'] = eps_ladder
                config = ConfigService.validate(
                    data, {}, source=base.source, seed=base.seed, out=options['out'] or str(base.out)
                )
            else:
                config = ConfigService.example_config(eps_ladder, seed=options['seed'], out=options['out'])
        except ConfigError as exc:
            raise CommandError(str(exc), returncode=EXIT_BAD_CONFIG)
        self.run_config(config, jobs=options['jobs'])
