"""How the two energy metrics price the same execution.

A 200 MI function on a 16 core device: the overall metric always pays the
idle power, the marginal one only pays it when the device was switched off.
"""
from energyplace.infrastructure import DevicePowerProfile, EdgeDevice, LoadState
from energyplace.metrics import (
    MarginalMode,
    device_energy_marginal,
    device_energy_overall,
    execution_time,
)
from energyplace.workload import FunctionSpec

linear = DevicePowerProfile.linear(98.0, 143.0, 16)
# same end points, but the first cores cost more than the last ones
concave = DevicePowerProfile(98.0, tuple(143.0 * (j / 16) ** 0.5 for j in range(17)))

f = FunctionSpec("F2", 200)
print(f"{'profile':>8} {'u':>5} {'t [ms]':>7} {'E^O [J]':>8} {'E^M [J]':>8} {'literal':>8}")
for name, profile in (("linear", linear), ("concave", concave)):
    dev = EdgeDevice(1, 500.0, 16, profile)
    for u in (0.0, 0.25, 0.5, 0.75, 0.95):
        load = LoadState({1: u}, {})
        print(
            f"{name:>8} {u:5.2f} {execution_time(f, dev, load):7.2f} "
            f"{device_energy_overall(f, dev, load):8.4f} "
            f"{device_energy_marginal(f, dev, load):8.4f} "
            f"{device_energy_marginal(f, dev, load, MarginalMode.LITERAL):8.4f}"
        )
