"""Compiled simulation kernel.

Same semantics as the object engine in :mod:`hybridsim.policy`,
:mod:`hybridsim.baselines` and :mod:`hybridsim.intermittence`, laid out over
flat integer arrays so a whole trace replays inside one numba call.

Block state is ``blk[set, way, field]`` with the field indices below. Memory
traffic is tallied into ``counts[phase, tech, op]`` instead of event lists.
"""

import numpy as np
from numba import njit, types
from numba.typed import Dict

# block fields
V, D, TAG, RIC, WIC, CONF, CONT = range(7)
NFIELDS = 7

# cfg slots
C_SETS, C_WAYS, C_WS, C_BSHIFT, C_SSHIFT, C_L, C_T, C_ARCH, C_WRITE_CLEAN, C_PERSIST = range(10)
NCFG = 10

# architectures
A_PROPOSED, A_RANDOM, A_PURE, A_CHECKPOINT = range(4)

# phases / techs / ops (match energy.Phase, core.Tech)
P_EXEC, P_BACKUP, P_RESTORE, P_FLUSH = range(4)
T_SRAM, T_STT, T_PCM = range(3)
RD, WR = 0, 1

# stats slots
(S_HIT_SRAM, S_HIT_STT, S_MISS, S_MIG_TO_STT, S_MIG_TO_SRAM, S_GAP, S_FAILURES,
 S_EPISODES, S_SAFE_POINTS, S_REWINDS, S_REEXEC, S_ERROR) = range(12)
NSTATS = 12

ERR_LIVELOCK = 1

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def splitmix_next(state):
    s = state[0] + _GAMMA
    state[0] = s
    z = s
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def _unit(x):
    return float(x >> _S11) * _INV53


@njit(cache=True)
def generate_records(ops, values, seed, write_fraction, hot_fraction, gap_fraction,
                     hot_blocks, space_blocks, block_size):
    state = np.empty(1, np.uint64)
    state[0] = seed
    hot = np.uint64(hot_blocks)
    space = np.uint64(space_blocks)
    sixteen = np.uint64(16)
    for i in range(ops.shape[0]):
        if _unit(splitmix_next(state)) < gap_fraction:
            ops[i] = 2
            values[i] = 1 + np.int64(splitmix_next(state) % sixteen)
            continue
        in_hot = _unit(splitmix_next(state)) < hot_fraction
        x = splitmix_next(state)
        if in_hot:
            block = np.int64(x % hot)
        else:
            block = np.int64(x % space)
        is_write = _unit(splitmix_next(state)) < write_fraction
        ops[i] = 1 if is_write else 0
        values[i] = block * block_size


def new_image():
    return Dict.empty(key_type=types.int64, value_type=types.int64)


@njit(cache=True)
def image_arrays(image):
    """(addresses, contents) of a typed image dict; iterating it from Python is slow."""
    n = len(image)
    keys = np.empty(n, np.int64)
    vals = np.empty(n, np.int64)
    i = 0
    for k, v in image.items():
        keys[i] = k
        vals[i] = v
        i += 1
    return keys, vals


@njit(cache=True)
def _store(image, addr, content):
    if content != 0:
        image[addr] = content


@njit(cache=True)
def _block_addr(blk, cfg, s, w):
    return ((blk[s, w, TAG] << cfg[C_SSHIFT]) | s) << cfg[C_BSHIFT]


@njit(cache=True)
def _clear(blk, s, w):
    for f in range(NFIELDS):
        blk[s, w, f] = 0


@njit(cache=True)
def _free_way(blk, s, lo, hi):
    for w in range(lo, hi):
        if blk[s, w, V] == 0:
            return w
    return -1


@njit(cache=True)
def _victim(blk, s, lo, hi, metric):
    # metric: RIC, WIC, or -1 for RIC+WIC; ties to the lowest way
    best = -1
    best_key = 0
    for w in range(lo, hi):
        if metric < 0:
            key = blk[s, w, RIC] + blk[s, w, WIC]
        else:
            key = blk[s, w, metric]
        if best < 0 or key < best_key:
            best = w
            best_key = key
    return best


@njit(cache=True)
def _evict(blk, pred, cfg, counts, image, s, w, phase):
    addr = _block_addr(blk, cfg, s, w)
    if blk[s, w, D] != 0:
        counts[phase, T_PCM, WR] += 1
        _store(image, addr, blk[s, w, CONT])
    if cfg[C_ARCH] == A_PROPOSED:
        idx = (addr >> cfg[C_BSHIFT]) % cfg[C_L]
        pred[idx] = 1 if w < cfg[C_WS] else 0
    _clear(blk, s, w)


@njit(cache=True)
def _migrate(blk, pred, cfg, counts, stats, image, s, w, dst):
    ws = cfg[C_WS]
    if dst == T_SRAM:
        lo, hi, metric = 0, ws, WIC
    else:
        lo, hi, metric = ws, cfg[C_WAYS], RIC
    d = _free_way(blk, s, lo, hi)
    if d < 0:
        d = _victim(blk, s, lo, hi, metric)
        _evict(blk, pred, cfg, counts, image, s, d, P_EXEC)
    src = T_SRAM if w < ws else T_STT
    counts[P_EXEC, src, RD] += 1
    counts[P_EXEC, dst, WR] += 1
    if dst == T_STT:
        stats[S_MIG_TO_STT] += 1
    else:
        stats[S_MIG_TO_SRAM] += 1
    blk[s, d, V] = 1
    blk[s, d, D] = blk[s, w, D]
    blk[s, d, TAG] = blk[s, w, TAG]
    blk[s, d, CONT] = blk[s, w, CONT]
    blk[s, d, RIC] = 0
    blk[s, d, WIC] = 0
    blk[s, d, CONF] = 0
    _clear(blk, s, w)


@njit(cache=True)
def _bump(blk, pred, cfg, counts, stats, image, s, w, field):
    # field RIC: read; WIC: write
    t = cfg[C_T]
    arch = cfg[C_ARCH]
    if arch >= A_PURE or blk[s, w, CONF] == 3:
        if blk[s, w, field] < t:
            blk[s, w, field] += 1
        return
    blk[s, w, field] += 1
    if blk[s, w, field] < t:
        return
    in_sram = w < cfg[C_WS]
    if field == RIC and in_sram:
        _migrate(blk, pred, cfg, counts, stats, image, s, w, T_STT)
    elif field == WIC and not in_sram:
        _migrate(blk, pred, cfg, counts, stats, image, s, w, T_SRAM)
    else:
        if arch == A_PROPOSED and blk[s, w, CONF] < 3:
            blk[s, w, CONF] += 1
        blk[s, w, field] = 0


@njit(cache=True)
def _write(blk, pred, cfg, counts, stats, image, s, w, wid):
    reg = T_SRAM if w < cfg[C_WS] else T_STT
    counts[P_EXEC, reg, WR] += 1
    blk[s, w, D] = 1
    blk[s, w, CONT] = wid
    _bump(blk, pred, cfg, counts, stats, image, s, w, WIC)


@njit(cache=True)
def access(blk, pred, cfg, counts, stats, rng, image, kind, addr, wid):
    """One read (kind 0) or write (kind 1). Returns 0 SRAM hit, 1 STT-RAM hit, 2 miss."""
    block = addr >> cfg[C_BSHIFT]
    s = block & (cfg[C_SETS] - 1)
    tag = block >> cfg[C_SSHIFT]
    ways = cfg[C_WAYS]
    ws = cfg[C_WS]
    for w in range(ways):
        if blk[s, w, V] != 0 and blk[s, w, TAG] == tag:
            reg = T_SRAM if w < ws else T_STT
            stats[S_HIT_SRAM + reg] += 1
            if kind == 0:
                counts[P_EXEC, reg, RD] += 1
                _bump(blk, pred, cfg, counts, stats, image, s, w, RIC)
            else:
                _write(blk, pred, cfg, counts, stats, image, s, w, wid)
            return reg

    arch = cfg[C_ARCH]
    if arch == A_PROPOSED:
        reg = T_STT if pred[block % cfg[C_L]] == 0 else T_SRAM
    elif arch == A_RANDOM:
        reg = T_SRAM if splitmix_next(rng) % np.uint64(2) == np.uint64(0) else T_STT
    else:
        reg = T_SRAM if ws > 0 else T_STT
    if reg == T_SRAM:
        lo, hi = 0, ws
    else:
        lo, hi = ws, ways
    w = _free_way(blk, s, lo, hi)
    if w < 0:
        if arch >= A_PURE:
            metric = -1
        elif reg == T_STT:
            metric = RIC
        else:
            metric = WIC
        w = _victim(blk, s, lo, hi, metric)
        _evict(blk, pred, cfg, counts, image, s, w, P_EXEC)
    stats[S_MISS] += 1
    baddr = block << cfg[C_BSHIFT]
    counts[P_EXEC, T_PCM, RD] += 1
    counts[P_EXEC, reg, WR] += 1
    blk[s, w, V] = 1
    blk[s, w, D] = 0
    blk[s, w, TAG] = tag
    blk[s, w, RIC] = 0
    blk[s, w, WIC] = 0
    blk[s, w, CONF] = 0
    blk[s, w, CONT] = image.get(baddr, 0)
    if kind == 0:
        _bump(blk, pred, cfg, counts, stats, image, s, w, RIC)
    else:
        _write(blk, pred, cfg, counts, stats, image, s, w, wid)
    return 2


@njit(cache=True)
def _drop(blk, cfg, counts, image, s, w):
    n = 0
    if blk[s, w, D] != 0 or cfg[C_WRITE_CLEAN] != 0:
        counts[P_BACKUP, T_PCM, WR] += 1
        _store(image, _block_addr(blk, cfg, s, w), blk[s, w, CONT])
        n = 1
    _clear(blk, s, w)
    return n


@njit(cache=True)
def backup_proposed(blk, cfg, counts, image, out):
    """CONF-priority backup; out[0] = STT-RAM writes, out[1] = PCM writes."""
    ways = cfg[C_WAYS]
    ws = cfg[C_WS]
    n_l1 = 0
    n_main = 0
    done = np.zeros(ways, np.bool_)
    placed = np.zeros(ways, np.bool_)
    for s in range(cfg[C_SETS]):
        done[:] = False
        placed[:] = False
        for _ in range(ws):
            best = -1
            for w in range(ws):
                if blk[s, w, V] == 0 or done[w]:
                    continue
                if best < 0:
                    best = w
                elif blk[s, w, CONF] > blk[s, best, CONF]:
                    best = w
                elif blk[s, w, CONF] == blk[s, best, CONF] and blk[s, w, WIC] > blk[s, best, WIC]:
                    best = w
            if best < 0:
                break
            done[best] = True
            d = _free_way(blk, s, ws, ways)
            if d < 0:
                victim = -1
                for v in range(ws, ways):
                    if not placed[v] and (victim < 0 or blk[s, v, CONF] < blk[s, victim, CONF]):
                        victim = v
                if victim < 0 or blk[s, best, CONF] < blk[s, victim, CONF]:
                    continue
                n_main += _drop(blk, cfg, counts, image, s, victim)
                d = victim
            counts[P_BACKUP, T_STT, WR] += 1
            n_l1 += 1
            blk[s, d, V] = 1
            blk[s, d, D] = blk[s, best, D]
            blk[s, d, TAG] = blk[s, best, TAG]
            blk[s, d, CONT] = blk[s, best, CONT]
            blk[s, d, CONF] = blk[s, best, CONF]
            blk[s, d, RIC] = 0
            blk[s, d, WIC] = 0
            placed[d] = True
            _clear(blk, s, best)
        for w in range(ws):
            if blk[s, w, V] != 0:
                n_main += _drop(blk, cfg, counts, image, s, w)
    out[0] = n_l1
    out[1] = n_main


@njit(cache=True)
def backup_everything(blk, cfg, counts, image, out):
    n_main = 0
    for s in range(cfg[C_SETS]):
        for w in range(cfg[C_WS]):
            if blk[s, w, V] != 0:
                n_main += _drop(blk, cfg, counts, image, s, w)
    out[0] = 0
    out[1] = n_main


@njit(cache=True)
def power_on(blk, pred, cfg):
    for s in range(cfg[C_SETS]):
        for w in range(cfg[C_WS]):
            _clear(blk, s, w)
    if cfg[C_ARCH] == A_PROPOSED and cfg[C_PERSIST] == 0:
        pred[:] = 1


@njit(cache=True)
def fail(blk, pred, cfg, counts, image, out):
    """Power failure + power-on for the non-checkpoint architectures."""
    if cfg[C_ARCH] == A_PROPOSED:
        backup_proposed(blk, cfg, counts, image, out)
    else:
        backup_everything(blk, cfg, counts, image, out)
    power_on(blk, pred, cfg)


@njit(cache=True)
def flush(blk, cfg, counts, image):
    for s in range(cfg[C_SETS]):
        for w in range(cfg[C_WAYS]):
            if blk[s, w, V] != 0 and blk[s, w, D] != 0:
                counts[P_FLUSH, T_PCM, WR] += 1
                _store(image, _block_addr(blk, cfg, s, w), blk[s, w, CONT])


@njit(cache=True)
def _snapshot(blk, cfg, counts, image, snap, mask, snapshot_all):
    mask[:, :] = False
    for s in range(cfg[C_SETS]):
        for w in range(cfg[C_WAYS]):
            if blk[s, w, V] != 0 and (blk[s, w, D] != 0 or snapshot_all):
                counts[P_BACKUP, T_PCM, WR] += 1
                _store(image, _block_addr(blk, cfg, s, w), blk[s, w, CONT])
                blk[s, w, D] = 0
                mask[s, w] = True
    snap[:, :, :] = blk


@njit(cache=True)
def _restore(blk, counts, snap, mask):
    blk[:, :, :] = 0
    for s in range(blk.shape[0]):
        for w in range(blk.shape[1]):
            if mask[s, w]:
                blk[s, w, :] = snap[s, w, :]
                counts[P_RESTORE, T_PCM, RD] += 1


@njit(cache=True)
def simulate(ops, values, wids, blk, pred, cfg, counts, stats, rng, image,
             fail_points, ckpt_period, snapshot_all, max_rewinds, bk_out):
    """Replay a whole trace. ``bk_out[k]`` receives (n_w_l1, n_w_main) of failure k."""
    n = ops.shape[0]
    nf = fail_points.shape[0]
    out = np.zeros(2, np.int64)
    ckpt = ckpt_period > 0
    snap = np.zeros_like(blk)
    mask = np.zeros((blk.shape[0], blk.shape[1]), np.bool_)
    snap_i = 0
    snap_pos = 0
    next_safe = ckpt_period if ckpt else 0
    fi = 0
    i = 0
    pos = 0
    while True:
        if ckpt and pos >= next_safe:
            # one safe point per record boundary, even if a gap crossed several multiples
            _snapshot(blk, cfg, counts, image, snap, mask, snapshot_all)
            stats[S_SAFE_POINTS] += 1
            stats[S_EPISODES] += 1
            snap_i = i
            snap_pos = pos
            next_safe = (pos // ckpt_period + 1) * ckpt_period
        while fi < nf and fail_points[fi] <= pos:
            stats[S_FAILURES] += 1
            if ckpt:
                bk_out[fi, 0] = 0
                bk_out[fi, 1] = 0
                stats[S_REWINDS] += 1
                if stats[S_REWINDS] > max_rewinds:
                    stats[S_ERROR] = ERR_LIVELOCK
                    return
                stats[S_REEXEC] += i - snap_i
                _restore(blk, counts, snap, mask)
                i = snap_i
                pos = snap_pos
                next_safe = (snap_pos // ckpt_period + 1) * ckpt_period
            else:
                fail(blk, pred, cfg, counts, image, out)
                stats[S_EPISODES] += 1
                bk_out[fi, 0] = out[0]
                bk_out[fi, 1] = out[1]
            fi += 1
        if i >= n:
            break
        op = ops[i]
        if op == 2:
            stats[S_GAP] += values[i]
            pos += values[i]
        else:
            access(blk, pred, cfg, counts, stats, rng, image, op, values[i], wids[i])
            pos += 1
        i += 1
