"""Frame parsing and canonical flow keys."""

import pytest
from hypothesis import given, strategies as st

from flowids.packet import (
    LINK_ETHERNET,
    LINK_RAW_IP,
    SKIP_NOT_IP,
    SKIP_TRUNCATED,
    ParsedPacket,
    SkippedPacket,
    canonical_key,
    format_ipv4,
    ipv4_to_int,
    parse_packet,
)

from helpers import eth_frame, icmp_echo_packet, tcp_packet, udp_packet

IP_A = ipv4_to_int("10.0.0.1")
IP_B = ipv4_to_int("10.0.0.2")


def test_udp_frame_hand_constructed():
    # 14 (eth) + 20 (ip) + 8 (udp) + 18 payload = 60-byte frame
    frame = eth_frame(udp_packet(IP_A, 1234, IP_B, 80, b"\x00" * 18))
    assert len(frame) == 60
    p = parse_packet(frame, LINK_ETHERNET, ts_us=5)
    assert p == ParsedPacket(5, IP_A, IP_B, 1234, 80, 17, 46)


def test_short_frame_skipped():
    with pytest.raises(SkippedPacket) as err:
        parse_packet(b"\x00" * 10, LINK_ETHERNET)
    assert err.value.reason == SKIP_TRUNCATED


def test_icmp_has_no_ports():
    p = parse_packet(eth_frame(icmp_echo_packet(IP_A, IP_B)), LINK_ETHERNET)
    assert p.protocol == 1
    assert (p.src_port, p.dst_port) == (0, 0)


def test_tcp_ports():
    p = parse_packet(eth_frame(tcp_packet(IP_A, 443, IP_B, 51000, b"hi")), LINK_ETHERNET)
    assert p.protocol == 6
    assert (p.src_port, p.dst_port) == (443, 51000)


def test_non_ipv4_ethertype_skipped():
    arp = b"\xff" * 12 + b"\x08\x06" + b"\x00" * 28
    with pytest.raises(SkippedPacket) as err:
        parse_packet(arp, LINK_ETHERNET)
    assert err.value.reason == SKIP_NOT_IP


def test_raw_ip_link_type():
    p = parse_packet(udp_packet(IP_A, 53, IP_B, 999, b"x"), LINK_RAW_IP)
    assert (p.src_port, p.dst_port) == (53, 999)
    assert p.pkt_len == 29


def test_ip_version_6_skipped():
    pkt = bytearray(udp_packet(IP_A, 1, IP_B, 2, b""))
    pkt[0] = 0x65
    with pytest.raises(SkippedPacket) as err:
        parse_packet(bytes(pkt), LINK_RAW_IP)
    assert err.value.reason == SKIP_NOT_IP


def test_bad_ihl_skipped():
    pkt = bytearray(udp_packet(IP_A, 1, IP_B, 2, b""))
    pkt[0] = 0x44  # ihl 16 < 20
    with pytest.raises(SkippedPacket) as err:
        parse_packet(bytes(pkt), LINK_RAW_IP)
    assert err.value.reason == SKIP_TRUNCATED


def test_total_len_below_header_skipped():
    pkt = bytearray(udp_packet(IP_A, 1, IP_B, 2, b""))
    pkt[2:4] = (10).to_bytes(2, "big")
    with pytest.raises(SkippedPacket) as err:
        parse_packet(bytes(pkt), LINK_RAW_IP)
    assert err.value.reason == SKIP_TRUNCATED


def test_truncated_transport_gives_zero_ports():
    pkt = udp_packet(IP_A, 1234, IP_B, 80, b"")[:22]  # cut inside the UDP header
    p = parse_packet(pkt, LINK_RAW_IP)
    assert (p.src_port, p.dst_port) == (0, 0)
    assert p.protocol == 17


def test_fragment_gives_zero_ports():
    pkt = bytearray(udp_packet(IP_A, 1234, IP_B, 80, b"data"))
    pkt[6:8] = (0x0010).to_bytes(2, "big")  # fragment offset 16
    p = parse_packet(bytes(pkt), LINK_RAW_IP)
    assert (p.src_port, p.dst_port) == (0, 0)


def test_unknown_link_type_raises():
    with pytest.raises(ValueError):
        parse_packet(b"\x00" * 64, "token_ring")


class TestCanonicalKey:
    def test_both_directions_collide(self):
        a = ParsedPacket(0, IP_A, IP_B, 1000, 80, 6, 40)
        b = ParsedPacket(0, IP_B, IP_A, 80, 1000, 6, 40)
        assert canonical_key(a) == canonical_key(b)

    def test_degenerate_equal_endpoints(self):
        p = ParsedPacket(0, IP_A, IP_A, 80, 80, 6, 40)
        k = canonical_key(p)
        assert (k.ip_lo, k.port_lo) == (k.ip_hi, k.port_hi)

    def test_lexicographic_rule(self):
        p = ParsedPacket(0, IP_B, IP_A, 53, 9999, 17, 40)
        k = canonical_key(p)
        assert (k.ip_lo, k.port_lo) == (IP_A, 9999)
        assert (k.ip_hi, k.port_hi) == (IP_B, 53)
        assert k.protocol == 17

    @given(
        st.integers(0, 2**32 - 1),
        st.integers(0, 2**32 - 1),
        st.integers(0, 65535),
        st.integers(0, 65535),
        st.integers(0, 255),
    )
    def test_symmetry_property(self, sip, dip, sp, dp, proto):
        p = ParsedPacket(0, sip, dip, sp, dp, proto, 40)
        r = ParsedPacket(0, dip, sip, dp, sp, proto, 40)
        assert canonical_key(p) == canonical_key(r)


class TestParserNeverCrashes:
    @given(st.binary(max_size=120), st.sampled_from([LINK_ETHERNET, LINK_RAW_IP]))
    def test_garbage_frames(self, frame, link_type):
        try:
            p = parse_packet(frame, link_type)
            assert 0 <= p.protocol <= 255
            assert p.pkt_len >= 20
        except SkippedPacket as err:
            assert err.reason in (SKIP_NOT_IP, SKIP_TRUNCATED)

    @given(st.integers(0, 59))
    def test_truncations_of_valid_frame(self, cut):
        frame = eth_frame(udp_packet(IP_A, 1234, IP_B, 80, b"\x00" * 18))[:cut]
        try:
            parse_packet(frame, LINK_ETHERNET)
        except SkippedPacket as err:
            assert err.reason in (SKIP_NOT_IP, SKIP_TRUNCATED)


def test_ipv4_formatting():
    assert format_ipv4(IP_A) == "10.0.0.1"
    assert ipv4_to_int("255.255.255.255") == 2**32 - 1
    with pytest.raises(ValueError):
        ipv4_to_int("1.2.3")
    with pytest.raises(ValueError):
        ipv4_to_int("1.2.3.999")
