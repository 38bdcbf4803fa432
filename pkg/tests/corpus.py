"""Synthetic capture corpora used across the test suite.

build_reference_capture engineers a capture whose labeled extraction output
reproduces the seven reference rows exactly (values, stream ordinals and row
order), exercising first-appearance stream indexing, relative acks against a
peer's ISN, and high stream ordinals reached through unregistered filler
traffic. build_training_capture makes a larger five-device capture with
device-distinctive header habits, enough to train and evaluate classifiers.
"""

from __future__ import annotations

import random

from pcapbuild import TCP_ACK, TCP_SYN, ethernet, ipv4, pcap_file, tcp, tcp_options_mss_ts_nops, udp

GATEWAY_MAC = "02:00:00:00:00:fe"

REFERENCE_REGISTRY = """\
aa:00:00:00:00:01\tAria\tiot
aa:00:00:00:00:02\tD-LinkCam\tiot
aa:00:00:00:00:03\tHueBridge\tiot
aa:00:00:00:00:04\tWeMoSwitch\tiot
aa:00:00:00:00:05\tHueSwitch\tiot
"""

REFERENCE_ROWS = [
    "62997,0,0,8688,,,60,64,6,Aria",
    "38067,56,4352,14048,,,366,64,6,D-LinkCam",
    "38067,56,4352,14048,,,366,64,6,D-LinkCam",
    ",,,,47581,653,65,64,17,HueBridge",
    ",,,,47581,653,65,64,17,HueBridge",
    ",,,,3074,1,443,4,17,WeMoSwitch",
    ",,,,52266,22,76,64,17,HueSwitch",
]


def _tcp_frame(src_mac, dst_mac, src_ip, dst_ip, *, ttl=64, **tcp_kwargs) -> bytes:
    return ethernet(dst_mac, src_mac, 0x0800, ipv4(src_ip, dst_ip, 6, tcp(**tcp_kwargs), ttl=ttl))


def _udp_frame(src_mac, dst_mac, src_ip, dst_ip, sport, dport, *, ttl=64, payload=b"") -> bytes:
    return ethernet(
        dst_mac, src_mac, 0x0800, ipv4(src_ip, dst_ip, 17, udp(sport, dport, payload), ttl=ttl)
    )


def build_reference_capture() -> bytes:
    frames: list[bytes] = []

    # Aria opens TCP conversation 0 with a 60-byte SYN, window 8688.
    frames.append(
        _tcp_frame(
            "aa:00:00:00:00:01",
            GATEWAY_MAC,
            "192.168.1.10",
            "10.9.9.9",
            src_port=62997,
            dst_port=80,
            seq=1000,
            ack=0,
            flags=TCP_SYN,
            window=8688,
            options=tcp_options_mss_ts_nops(),
        )
    )
    # 55 unregistered TCP conversations push the next ordinal to 56.
    for i in range(55):
        frames.append(
            _tcp_frame(
                "02:00:00:00:10:00",
                GATEWAY_MAC,
                f"10.0.{i // 200}.{i % 200 + 1}",
                "10.9.9.9",
                src_port=40000 + i,
                dst_port=80,
                seq=5,
                flags=TCP_SYN,
                window=1024,
            )
        )
    # A peer opens conversation 56 toward D-LinkCam; its SYN carries the ISN
    # the camera's acknowledgments are measured against.
    peer_isn = 7777
    frames.append(
        _tcp_frame(
            "02:00:00:00:20:00",
            "aa:00:00:00:00:02",
            "10.0.1.1",
            "192.168.1.11",
            src_port=9000,
            dst_port=38067,
            seq=peer_isn,
            flags=TCP_SYN,
            window=2048,
        )
    )
    # Two identical camera packets: relative ack 4352, raw window 14048,
    # 326 payload bytes -> ip.len 366.
    for _ in range(2):
        frames.append(
            _tcp_frame(
                "aa:00:00:00:00:02",
                "02:00:00:00:20:00",
                "192.168.1.11",
                "10.0.1.1",
                src_port=38067,
                dst_port=9000,
                seq=3_000_000,
                ack=peer_isn + 4352,
                flags=TCP_ACK,
                window=14048,
                payload=b"\xab" * 326,
            )
        )

    # UDP conversation 0 is unregistered filler.
    frames.append(
        _udp_frame("02:00:00:00:30:00", GATEWAY_MAC, "10.0.2.1", "10.9.9.9", 5000, 53)
    )
    # A peer reaches WeMoSwitch first, so the switch's later reply reuses
    # UDP conversation 1.
    frames.append(
        _udp_frame(
            "02:00:00:00:31:00", "aa:00:00:00:00:04", "10.0.3.1", "192.168.1.13", 9999, 3074
        )
    )
    # Fillers for conversations 2..21.
    for i in range(20):
        frames.append(
            _udp_frame(
                "02:00:00:00:32:00", GATEWAY_MAC, f"10.1.0.{i + 1}", "10.9.9.9", 6000 + i, 53
            )
        )
    # A peer reaches HueSwitch: conversation 22.
    frames.append(
        _udp_frame(
            "02:00:00:00:33:00", "aa:00:00:00:00:05", "10.0.5.1", "192.168.1.14", 1111, 52266
        )
    )
    # Fillers for conversations 23..652.
    for i in range(630):
        frames.append(
            _udp_frame(
                "02:00:00:00:34:00",
                GATEWAY_MAC,
                f"10.2.{i // 250}.{i % 250 + 1}",
                "10.9.9.9",
                7000 + i % 2000,
                53,
            )
        )
    # HueBridge itself opens conversation 653; 37 payload bytes -> ip.len 65.
    for _ in range(2):
        frames.append(
            _udp_frame(
                "aa:00:00:00:00:03",
                GATEWAY_MAC,
                "192.168.1.12",
                "10.0.6.1",
                47581,
                1900,
                payload=b"\x01" * 37,
            )
        )
    # WeMoSwitch replies on conversation 1 with ttl 4; 415 bytes -> ip.len 443.
    frames.append(
        _udp_frame(
            "aa:00:00:00:00:04",
            "02:00:00:00:31:00",
            "192.168.1.13",
            "10.0.3.1",
            3074,
            9999,
            ttl=4,
            payload=b"\x02" * 415,
        )
    )
    # HueSwitch replies on conversation 22; 48 bytes -> ip.len 76.
    frames.append(
        _udp_frame(
            "aa:00:00:00:00:05",
            "02:00:00:00:33:00",
            "192.168.1.14",
            "10.0.5.1",
            52266,
            1111,
            payload=b"\x03" * 48,
        )
    )
    return pcap_file(frames)


# ---------------------------------------------------------------------------
# Training corpus: five devices with distinctive header habits

TRAINING_REGISTRY = """\
aa:10:00:00:00:01\tAlphaSensor\tiot
aa:10:00:00:00:02\tBetaPlug\tiot
aa:10:00:00:00:03\tGammaHub\tiot
aa:10:00:00:00:04\tDeltaLaptop\tnon-iot
aa:10:00:00:00:05\tEpsilonPhone\tnon-iot
"""

_PROFILES = [
    # name, mac, ip, kind, ttl, port_base, window, len_base, ack_stride
    ("AlphaSensor", "aa:10:00:00:00:01", "192.168.7.11", "tcp", 64, 30000, 4096, 60, 48),
    ("BetaPlug", "aa:10:00:00:00:02", "192.168.7.12", "tcp", 255, 41000, 29200, 480, 1400),
    ("GammaHub", "aa:10:00:00:00:03", "192.168.7.13", "udp", 64, 5000, 0, 90, 0),
    ("DeltaLaptop", "aa:10:00:00:00:04", "192.168.7.14", "udp", 128, 61000, 0, 300, 0),
    ("EpsilonPhone", "aa:10:00:00:00:05", "192.168.7.15", "mixed", 128, 50000, 65535, 150, 512),
]


def build_training_capture(seed: int = 7, conversations_per_device: int = 12) -> bytes:
    """Deterministic five-device capture with learnable per-device habits.

    Each conversation is opened by the device (SYN for TCP, first datagram
    for UDP), answered by an unregistered gateway so relative acks resolve,
    then continued with a couple of device packets.
    """
    rng = random.Random(seed)
    frames: list[bytes] = []
    for name, mac, ip, kind, ttl, port_base, window, len_base, ack_stride in _PROFILES:
        for c in range(conversations_per_device):
            sport = port_base + c
            server_ip = f"172.16.{rng.randrange(1, 5)}.{rng.randrange(1, 250)}"
            use_tcp = kind == "tcp" or (kind == "mixed" and c % 2 == 0)
            if use_tcp:
                isn = rng.randrange(1, 2**31)
                server_isn = rng.randrange(1, 2**31)
                frames.append(
                    _tcp_frame(
                        mac, GATEWAY_MAC, ip, server_ip,
                        ttl=ttl,
                        src_port=sport, dst_port=443,
                        seq=isn, flags=TCP_SYN, window=window,
                        options=tcp_options_mss_ts_nops(),
                    )
                )
                frames.append(
                    _tcp_frame(
                        GATEWAY_MAC, mac, server_ip, ip,
                        ttl=58,
                        src_port=443, dst_port=sport,
                        seq=server_isn, ack=isn + 1, flags=TCP_SYN | TCP_ACK, window=14600,
                    )
                )
                for p in range(3):
                    pad = rng.randrange(0, 16)
                    frames.append(
                        _tcp_frame(
                            mac, GATEWAY_MAC, ip, server_ip,
                            ttl=ttl,
                            src_port=sport, dst_port=443,
                            seq=isn + 1, ack=server_isn + 1 + p * ack_stride,
                            flags=TCP_ACK, window=window,
                            payload=b"\x00" * (len_base - 40 + pad),
                        )
                    )
            else:
                for p in range(4):
                    pad = rng.randrange(0, 16)
                    frames.append(
                        _udp_frame(
                            mac, GATEWAY_MAC, ip, server_ip,
                            sport, 8883,
                            ttl=ttl,
                            payload=b"\x00" * (len_base - 28 + pad),
                        )
                    )
                frames.append(
                    _udp_frame(
                        GATEWAY_MAC, mac, server_ip, ip, 8883, sport, ttl=58, payload=b"\x00" * 30
                    )
                )
    return pcap_file(frames)
