"""
Management command to run every task of an experiment config
"""
from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Run the tasks of an experiment config and write CSV and JSON-lines reports'

    def add_arguments(self, parser):
        parser.add_argument('config', help='Path to a YAML experiment config')
        super().add_arguments(parser)

    def handle(self, *args, **options):
        config = self.load_config(options['config'], options)
        self.run_config(config, jobs=options['jobs'])
