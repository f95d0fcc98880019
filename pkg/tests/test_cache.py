import json
import threading

from cavitypress.cache import ENTRIES, ResultCache, digest


def square(recipe):
    return {"value": recipe["x"] ** 2}


def fill(cache, xs):
    for x in xs:
        cache.put({"x": x}, square({"x": x}))


def test_empty_cache_stats_zero(tmp_path):
    assert ResultCache(tmp_path).stats() == {"entries": 0, "bytes": 0, "hits": 0, "misses": 0, "hit_rate": 0.0}


def test_get_put_and_hit_rate(tmp_path):
    c = ResultCache(tmp_path)
    assert c.get({"x": 3}) is None
    c.put({"x": 3}, {"value": 9})
    assert c.get({"x": 3}) == {"value": 9}
    s = c.stats()
    assert s["entries"] == 1 and s["hits"] == 1 and s["misses"] == 1 and s["hit_rate"] == 0.5


def test_put_replaces_same_key(tmp_path):
    c = ResultCache(tmp_path)
    c.put({"x": 1}, {"value": 1})
    c.put({"x": 1}, {"value": 2})
    assert c.stats()["entries"] == 1 and c.get({"x": 1}) == {"value": 2}


def test_verify_clean(tmp_path):
    c = ResultCache(tmp_path)
    fill(c, range(200))
    rep = c.verify(square, fraction=0.01)
    assert rep.ok and rep.checked == 200 and rep.recomputed == 2 and not rep.mismatches


def test_verify_flags_exactly_the_corrupted_key(tmp_path):
    c = ResultCache(tmp_path)
    fill(c, range(20))
    path = tmp_path / ENTRIES
    lines = path.read_text().splitlines()
    entry = json.loads(lines[7])
    entry["result"]["value"] += 1
    lines[7] = json.dumps(entry, sort_keys=True, separators=(",", ":"))
    path.write_text("\n".join(lines) + "\n")
    rep = c.verify(square, fraction=1.0)
    assert rep.corrupt == [entry["key"]] and rep.mismatches == []
    assert c.get({"x": 7}) is None


def test_verify_flags_nondeterministic_result(tmp_path):
    c = ResultCache(tmp_path)
    fill(c, [5])
    rep = c.verify(lambda r: {"value": -1}, fraction=1.0)
    assert rep.mismatches == [ResultCache.key_for({"x": 5})]


def test_gc_by_age(tmp_path):
    c = ResultCache(tmp_path)
    fill(c, range(3))
    assert c.gc(max_age_seconds=3600) == 0
    assert c.gc(max_age_seconds=-1) == 3
    assert c.stats()["entries"] == 0


def test_concurrent_writers(tmp_path):
    c = ResultCache(tmp_path)
    threads = [threading.Thread(target=fill, args=(c, range(k * 10, k * 10 + 10))) for k in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert c.stats()["entries"] == 40
    assert c.verify(square, fraction=1.0).ok


def test_checksum_is_canonical():
    assert digest({"a": 1, "b": 2}) == digest({"b": 2, "a": 1})
