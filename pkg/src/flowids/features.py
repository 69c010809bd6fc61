"""Feature vector assembly.

The order below is canonical and frozen; model documents refer to
features by name and the loader resolves names to these indices, so a
retrained model can never silently misalign.
"""

from __future__ import annotations

from .flows import FlowRecord, PacketObservation
from .fxp import Fx64, fx_from_int
from .packet import ParsedPacket

FEATURE_NAMES = (
    "src_port",
    "dst_port",
    "protocol",
    "pkt_len",
    "iat",
    "direction",
    "mean_len",
    "mean_iat",
    "mean_dir",
    "mad_len",
    "mad_iat",
    "mad_dir",
)
N_FEATURES = len(FEATURE_NAMES)
FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}

FeatureVector = list  # 12 Fx64 values in canonical order


def assemble(p: ParsedPacket, snap: FlowRecord, obs: PacketObservation) -> list[Fx64]:
    """Pure projection of packet + flow snapshot into canonical order.

    Ports are the current packet's ports as sent, not flow-canonical.
    """
    return [
        fx_from_int(p.src_port),
        fx_from_int(p.dst_port),
        fx_from_int(p.protocol),
        obs.pkt_len,
        obs.iat,
        obs.direction,
        snap.mean_len,
        snap.mean_iat,
        snap.mean_dir,
        snap.mad_len,
        snap.mad_iat,
        snap.mad_dir,
    ]
