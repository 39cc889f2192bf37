"""Regenerate the FCIDUMP fixtures and manifest under fixtures/.

Needs pyscf. The Rust workspace only reads the committed outputs.

    python3 tools/gen_fixtures.py --out fixtures
"""
import argparse
import json
import math
import os

import numpy as np
import pyscf
from pyscf import fci, gto, scf
from pyscf.tools import fcidump

FCI_CAP = 20000


def h2(r):
    return [("H", (0, 0, 0)), ("H", (0, 0, r))]


def lih(r):
    return [("Li", (0, 0, 0)), ("H", (0, 0, r))]


def h4_symmetric(r):
    return [("H", (0, 0, i * r)) for i in range(4)]


def h6_terminal(r, spacing=0.9):
    atoms = [("H", (0, 0, i * spacing)) for i in range(5)]
    atoms.append(("H", (0, 0, 4 * spacing + r)))
    return atoms


def h2o_one_oh(r, fixed=0.958, angle=104.5):
    a = math.radians(angle)
    return [
        ("O", (0, 0, 0)),
        ("H", (fixed, 0, 0)),
        ("H", (r * math.cos(a), r * math.sin(a), 0)),
    ]


def beh2_one_beh(r, fixed=1.326):
    return [("Be", (0, 0, 0)), ("H", (0, 0, -fixed)), ("H", (0, 0, r))]


def grid(lo, hi, n):
    return [round(lo + (hi - lo) * i / (n - 1), 6) for i in range(n)]


RECIPES = [
    ("h2", "H-H distance", h2, ["sto-3g"], grid(0.5, 2.5, 11) + [0.735]),
    ("lih", "Li-H distance", lih, ["sto-3g"], grid(1.0, 3.0, 6)),
    ("h4", "linear chain, equal spacing", h4_symmetric, ["sto-3g", "6-31g"], grid(0.6, 2.4, 7)),
    ("h6", "linear chain, 0.9 A spacing, terminal bond stretched", h6_terminal, ["sto-3g"], grid(0.6, 2.4, 7)),
    ("h2o", "one O-H stretched, other 0.958 A, angle 104.5 deg", h2o_one_oh, ["sto-3g"],
     [0.8, 0.95, 1.1, 1.25, 1.4, 1.6, 1.8, 2.0]),
    ("beh2", "linear, one Be-H 1.326 A, other stretched", beh2_one_beh, ["sto-3g"], grid(1.0, 3.0, 6)),
]


def basis_tag(basis):
    return basis.replace("-", "")


def generate(out_dir):
    entries = []
    errors = []
    labels = set()
    for mol_name, description, geometry, bases, rs in RECIPES:
        for basis in bases:
            for r in rs:
                label = f"{mol_name}_{basis_tag(basis)}_{r:.3f}"
                if label in labels:
                    raise SystemExit(f"duplicate label {label}")
                labels.add(label)
                mol = gto.M(atom=geometry(r), basis=basis, unit="Angstrom", verbose=0, symmetry=False)
                mf = scf.RHF(mol)
                mf.conv_tol = 1e-12
                mf.max_cycle = 200
                e_hf = mf.kernel()
                if not mf.converged:
                    mf = scf.newton(mf)
                    e_hf = mf.kernel()
                if not mf.converged:
                    errors.append({"label": label, "error": "SCF did not converge"})
                    continue
                path = os.path.join(out_dir, f"{label}.fcidump")
                fcidump.from_scf(mf, path, tol=1e-14)
                norb = mf.mo_coeff.shape[1]
                nelec = mol.nelectron
                na, nb = nelec // 2, nelec // 2
                dim = math.comb(norb, na) * math.comb(norb, nb)
                e_fci = None
                if dim <= FCI_CAP:
                    cis = fci.FCI(mf)
                    cis.conv_tol = 1e-12
                    e_fci = float(cis.kernel()[0])
                entries.append({
                    "label": label,
                    "molecule": mol_name,
                    "geometry": f"{description}; R = {r:.3f} A",
                    "r": r,
                    "basis": basis.upper(),
                    "path": f"{label}.fcidump",
                    "n_qubits": 2 * norb,
                    "n_alpha": na,
                    "n_beta": nb,
                    "hf_energy": float(e_hf),
                    "fci_ground_energy": e_fci,
                })
                print(label, e_hf, e_fci, flush=True)
    manifest = {"backend": f"pyscf {pyscf.__version__}", "fixtures": entries, "errors": errors}
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--out", default="fixtures")
    args = p.parse_args()
    os.makedirs(args.out, exist_ok=True)
    generate(args.out)
