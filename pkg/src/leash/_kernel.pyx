# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled subsumption kernels over bit-packed boundary codes.

Same contract as _kernel_py; the tables below must match lattice.LOC_INDEX.
"""

cdef unsigned char LOC_LEQ[8][8]

cdef void _init_tables():
    cdef int i, j
    for i in range(8):
        for j in range(8):
            LOC_LEQ[i][j] = 0
    # exact < parent < local
    LOC_LEQ[0][0] = 1; LOC_LEQ[0][1] = 1; LOC_LEQ[0][2] = 1
    LOC_LEQ[1][1] = 1; LOC_LEQ[1][2] = 1
    LOC_LEQ[2][2] = 1
    # ctxt
    LOC_LEQ[3][3] = 1
    # intnet < extnet
    LOC_LEQ[4][4] = 1; LOC_LEQ[4][5] = 1
    LOC_LEQ[5][5] = 1

_init_tables()


cdef inline unsigned char _leq(unsigned short a, unsigned short b) nogil:
    if not LOC_LEQ[a & 7][b & 7]:
        return 0
    if not LOC_LEQ[(a >> 3) & 7][(b >> 3) & 7]:
        return 0
    if ((a >> 6) & 3) & ~((b >> 6) & 3):
        return 0
    if ((a >> 8) & 31) & ~((b >> 8) & 31):
        return 0
    return 1


def leq_matrix_into(const unsigned short[:] a_codes,
                    const unsigned short[:] b_codes,
                    unsigned char[:, :] out):
    cdef Py_ssize_t i, j, n = a_codes.shape[0], m = b_codes.shape[0]
    with nogil:
        for i in range(n):
            for j in range(m):
                out[i, j] = _leq(a_codes[i], b_codes[j])


def covers_mask_into(const unsigned short[:] rule_codes,
                     unsigned short query_code,
                     unsigned char[:] out):
    cdef Py_ssize_t j, m = rule_codes.shape[0]
    with nogil:
        for j in range(m):
            out[j] = _leq(query_code, rule_codes[j])
