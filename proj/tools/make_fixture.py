#!/usr/bin/env python3
"""Writes data/conn_sample.log: 200 labelled flows in IoT-23 conn.log layout.

Tab-separated Zeek columns, with the trailing tunnel_parents / label /
detailed-label triple separated by three spaces as in the IoT-23 release.
Output is fully determined by the seed.
"""

import random
import sys

FIELDS = ("ts uid id.orig_h id.orig_p id.resp_h id.resp_p proto service duration orig_bytes resp_bytes "
          "conn_state local_orig local_resp missed_bytes history orig_pkts orig_ip_bytes resp_pkts "
          "resp_ip_bytes").split()
TYPES = ("time string addr port addr port enum string interval count count string bool bool count string "
         "count count count count").split()


def benign(rng, ts):
    proto, service, port = rng.choice([("udp", "dns", 53), ("tcp", "http", 80), ("tcp", "ssl", 443),
                                       ("udp", "-", 123), ("udp", "dhcp", 67)])
    opk = rng.randint(1, 12)
    rpk = rng.randint(1, 12)
    ob = opk * rng.randint(30, 400)
    rb = rpk * rng.randint(30, 900)
    return dict(proto=proto, service=service, resp_h=f"192.168.1.{rng.randint(1, 30)}", resp_p=port,
                duration=f"{rng.uniform(0.001, 4.0):.6f}", orig_bytes=ob, resp_bytes=rb,
                conn_state=rng.choice(["SF", "SF", "SF", "S0", "RSTO"]),
                history=rng.choice(["Dd", "ShADadfF", "ShADadFf", "D"]),
                orig_pkts=opk, orig_ip_bytes=ob + 28 * opk, resp_pkts=rpk, resp_ip_bytes=rb + 28 * rpk,
                label="-   benign   -")


def malicious(rng, ts):
    kind = rng.choice(["scan", "scan", "cc"])
    if kind == "scan":
        return dict(proto="tcp", service="-", resp_h=f"{rng.randint(1, 223)}.{rng.randint(0, 255)}."
                    f"{rng.randint(0, 255)}.{rng.randint(1, 254)}", resp_p=rng.choice([23, 2323, 8080, 37215]),
                    duration="-", orig_bytes="-", resp_bytes="-", conn_state="S0", history="S",
                    orig_pkts=1, orig_ip_bytes=40, resp_pkts=0, resp_ip_bytes=0,
                    label="-   Malicious   PartOfAHorizontalPortScan")
    opk = rng.randint(3, 8)
    return dict(proto="tcp", service=rng.choice(["-", "http"]), resp_h="185.244.25.235", resp_p=6667,
                duration=f"{rng.uniform(2.0, 40.0):.6f}", orig_bytes=opk * 60, resp_bytes=rng.randint(0, 500),
                conn_state=rng.choice(["S3", "SF", "OTH"]), history="ShAdDa", orig_pkts=opk,
                orig_ip_bytes=opk * 112, resp_pkts=rng.randint(2, 6), resp_ip_bytes=rng.randint(200, 900),
                label="-   Malicious   C&C")


def main(path, n=200, n_malicious=50, seed=23):
    rng = random.Random(seed)
    kinds = [True] * n_malicious + [False] * (n - n_malicious)
    rng.shuffle(kinds)
    ts = 1545403816.0
    lines = ["#separator \\x09", "#set_separator\t,", "#empty_field\t(empty)", "#unset_field\t-",
             "#path\tconn", "#open\t2018-12-21-15-50-14",
             "#fields\t" + "\t".join(FIELDS) + "\ttunnel_parents   label   detailed-label",
             "#types\t" + "\t".join(TYPES) + "\tset[string]   string   string"]
    for i, bad in enumerate(kinds):
        ts += rng.uniform(0.01, 90.0)
        rec = malicious(rng, ts) if bad else benign(rng, ts)
        row = [f"{ts:.6f}", f"C{rng.getrandbits(60):015x}", f"192.168.100.{rng.choice([103, 111, 113])}",
               str(rng.randint(1024, 65535)), rec["resp_h"], str(rec["resp_p"]), rec["proto"], rec["service"],
               rec["duration"], str(rec["orig_bytes"]), str(rec["resp_bytes"]), rec["conn_state"], "-", "-", "0",
               rec["history"], str(rec["orig_pkts"]), str(rec["orig_ip_bytes"]), str(rec["resp_pkts"]),
               str(rec["resp_ip_bytes"])]
        lines.append("\t".join(row) + "\t" + rec["label"])
    lines.append("#close\t2018-12-22-15-50-14")
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/conn_sample.log")
