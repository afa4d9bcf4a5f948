"""Generate 4-qubit H2/STO-3G qubit Hamiltonians (Jordan-Wigner, interleaved spin orbitals).

Usage: python3 scripts/h2_hamiltonian.py OUT_DIR DIST [DIST ...]

Requires pyscf. Writes one JSON file per bond distance (Angstrom) in the format
read by `dualpure vqe --hamiltonian`.
"""
import itertools
import json
import sys

import numpy as np
from pyscf import ao2mo, gto, scf

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}
LOWER = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|, |1> = occupied


def kron_all(ms):
    out = np.eye(1)
    for m in ms:
        out = np.kron(out, m)
    return out


def annihilator(p, n):
    # qubit 0 is the most significant tensor factor
    return kron_all([Z] * p + [LOWER] + [I2] * (n - p - 1))


def qubit_hamiltonian(dist):
    mol = gto.M(atom=f"H 0 0 0; H 0 0 {dist}", basis="sto-3g", unit="Angstrom", verbose=0)
    mf = scf.RHF(mol).run()
    c = mf.mo_coeff
    h1 = c.T @ mf.get_hcore() @ c
    eri = ao2mo.restore(1, ao2mo.kernel(mol, c), c.shape[1])
    nso = 2 * c.shape[1]
    a = [annihilator(p, nso) for p in range(nso)]
    ad = [m.conj().T for m in a]
    dim = 2**nso
    h = np.eye(dim) * mol.energy_nuc()
    # interleaved spin orbitals: p = 2*spatial + spin
    for p, q in itertools.product(range(nso), repeat=2):
        if p % 2 == q % 2:
            h = h + h1[p // 2, q // 2] * ad[p] @ a[q]
    for p, q, r, s in itertools.product(range(nso), repeat=4):
        if p % 2 == r % 2 and q % 2 == s % 2:
            v = eri[p // 2, r // 2, q // 2, s // 2]
            if v != 0.0:
                h = h + 0.5 * v * ad[p] @ ad[q] @ a[s] @ a[r]
    terms = []
    for word in itertools.product("IXYZ", repeat=nso):
        coeff = np.trace(kron_all([PAULI[ch] for ch in word]) @ h).real / dim
        if abs(coeff) > 1e-10:
            terms.append({"pauli": "".join(word), "coeff": float(coeff)})
    # two-electron sector ground energy for the record
    nop = sum(ad[p] @ a[p] for p in range(nso))
    evals, evecs = np.linalg.eigh(h)
    occ = np.real(np.einsum("ij,jk,ki->i", evecs.conj().T, nop, evecs))
    fci = min(e for e, o in zip(evals, occ) if abs(o - 2) < 1e-8)
    return terms, float(mf.e_tot), float(fci)


def main():
    out_dir = sys.argv[1]
    for d in sys.argv[2:]:
        dist = float(d)
        terms, e_hf, e_fci = qubit_hamiltonian(dist)
        doc = {
            "n_qubits": 4,
            "terms": terms,
            "meta": {
                "molecule": "H2",
                "basis": "sto-3g",
                "distance_angstrom": dist,
                "mapping": "jordan-wigner, interleaved spin orbitals (0a,0b,1a,1b), qubit 0 leftmost",
                "source": "pyscf RHF integrals, scripts/h2_hamiltonian.py",
                "e_hf": e_hf,
                "e_fci": e_fci,
            },
        }
        path = f"{out_dir}/h2_{dist:.3f}.json"
        with open(path, "w") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")
        print(path, len(terms), e_fci)


if __name__ == "__main__":
    main()
