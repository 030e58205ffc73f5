"""Evolutionary hard-block placement for columnar FPGA-like fabrics."""

from .device import (BlockType, Column, Device, Site, load_device, save_device,
                     load_bundled_device, bundled_device_path, sites_in_region,
                     synth_device)
from .design import (CascadeChain, Connection, DesignSpec, LogicalBlock,
                     UnitSpec, builtin_conv_unit, load_design, replicate_netlist,
                     save_design)
from .genotype import (Genotype, Placement, decode, decode_reduced,
                       legalize_distribution, load_placement, migrate,
                       random_genotype, save_placement)
from .objective import (ObjectiveValues, check_constraints, evaluate_placement,
                        max_bbox, scalarize, wirelength_squared)
from .errors import (CapacityError, FlowError, ParseError, RapidPlaceError,
                     ValidationError)

__version__ = "0.1.0"
