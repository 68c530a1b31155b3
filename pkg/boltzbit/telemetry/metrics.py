from opentelemetry import metrics
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.resources import SERVICE_NAME, Resource

from boltzbit.settings import config

from . import prometheus

readers = []

if config.metrics.prometheus.enable:
    readers.append(prometheus.reader())


resource = Resource(attributes={SERVICE_NAME: "boltzbit"})

provider = MeterProvider(resource=resource, metric_readers=readers)
metrics.set_meter_provider(provider)

meter = metrics.get_meter("boltzbit.meter")

network_evaluations = meter.create_counter(
    "network.evaluations",
    description="Batched network forward passes, by kind (denoise, traverse)",
)

training_iterations = meter.create_counter(
    "training.iterations",
    description="Optimizer steps taken by training and distillation loops",
)

ensemble_ess = meter.create_gauge(
    "ensemble.ess",
    description="Effective sample size of the most recent weighted ensemble",
)
