"""HTTP studio service tests: caching, invalidation, and wire contract."""

import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient

from kinetype.gif import FrameSequence, decode_gif, encode_gif
from kinetype.pipeline import PipelineConfig, run_pipeline
from kinetype.service import create_app
from kinetype.synthetic import translating_disk

from conftest import FONT_PATH


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app(FONT_PATH)) as c:
        yield c


@pytest.fixture(scope="module")
def gif_bytes():
    seq, _ = translating_disk()
    return encode_gif(seq)


@pytest.fixture()
def sid(client, gif_bytes):
    """Fresh session with animation and text already set."""
    sid = client.post("/sessions").json()["id"]
    client.post(f"/sessions/{sid}/gif", content=gif_bytes)
    client.put(f"/sessions/{sid}/text", json={"text": "sy"})
    return sid


def test_create_and_status(client):
    created = client.post("/sessions")
    assert created.status_code == 201
    body = created.json()
    assert body["revision"] == 0
    status = client.get(f"/sessions/{body['id']}").json()
    assert status["has_animation"] is False
    assert status["text"] is None
    assert status["params"] == {
        "alpha": 2.0, "e": 2.0, "k": 3, "n": 10, "source": "driving_gif",
    }
    assert status["state_hash"] == body["state_hash"]


def test_unknown_session_404(client):
    assert client.get("/sessions/zzz").status_code == 404
    assert client.delete("/sessions/zzz").status_code == 404


def test_delete_session(client):
    sid = client.post("/sessions").json()["id"]
    assert client.delete(f"/sessions/{sid}").json() == {"deleted": sid}
    assert client.get(f"/sessions/{sid}").status_code == 404


def test_upload_animation(client, gif_bytes):
    sid = client.post("/sessions").json()["id"]
    reply = client.post(f"/sessions/{sid}/gif", content=gif_bytes).json()
    assert reply["frames"] == 12
    assert reply["width"] == 96 and reply["height"] == 96
    assert reply["revision"] == 1
    assert client.get(f"/sessions/{sid}").json()["has_animation"] is True


def test_corrupt_animation_422(client):
    sid = client.post("/sessions").json()["id"]
    before = client.get(f"/sessions/{sid}").json()
    reply = client.post(f"/sessions/{sid}/gif", content=b"junk")
    assert reply.status_code == 422
    after = client.get(f"/sessions/{sid}").json()
    assert after["revision"] == before["revision"]
    assert after["has_animation"] is False


def test_prerequisites_409(client, gif_bytes):
    sid = client.post("/sessions").json()["id"]
    assert client.get(f"/sessions/{sid}/keypoints").status_code == 409
    assert client.get(f"/sessions/{sid}/result").status_code == 409
    client.post(f"/sessions/{sid}/gif", content=gif_bytes)
    assert client.get(f"/sessions/{sid}/controls").status_code == 409  # no text


def test_set_text(client, gif_bytes):
    sid = client.post("/sessions").json()["id"]
    reply = client.put(f"/sessions/{sid}/text", json={"text": "sy"}).json()
    assert reply["changed"] is True
    assert reply["controls"] > 0
    again = client.put(f"/sessions/{sid}/text", json={"text": "sy"}).json()
    assert again["changed"] is False
    assert again["revision"] == reply["revision"]  # idempotent writes do not bump


def test_bad_text_leaves_session_intact(sid, client):
    before = client.get(f"/sessions/{sid}").json()
    assert client.put(f"/sessions/{sid}/text", json={"text": "   "}).status_code == 422
    bad_mode = client.put(
        f"/sessions/{sid}/text", json={"text": "hi", "mode": "sideways"}
    )
    assert bad_mode.status_code == 422
    after = client.get(f"/sessions/{sid}").json()
    assert after["text"] == "sy"
    assert after["revision"] == before["revision"]
    assert after["state_hash"] == before["state_hash"]


def test_keypoints_shape(sid, client):
    kp = client.get(f"/sessions/{sid}/keypoints").json()
    assert kp["n"] == 10 and kp["f"] == 12
    assert kp["source"] == "kmeans"
    assert np.array(kp["positions"]).shape == (10, 12, 2)
    one_frame = client.get(f"/sessions/{sid}/keypoints", params={"frame": 3}).json()
    assert np.array(one_frame["positions"]).shape == (10, 2)
    assert one_frame["positions"] == [row[2] for row in kp["positions"]]
    single = client.get(f"/sessions/{sid}/keypoints/2/3").json()
    assert [single["x"], single["y"]] == kp["positions"][1][2]


def test_keypoint_index_errors(sid, client):
    assert client.get(f"/sessions/{sid}/keypoints/11/1").status_code == 404
    assert client.get(f"/sessions/{sid}/keypoints/1/13").status_code == 404
    assert client.get(f"/sessions/{sid}/keypoints/0/1").status_code == 404
    assert client.get(
        f"/sessions/{sid}/keypoints", params={"frame": 99}
    ).status_code == 404
    bad = client.patch(
        f"/sessions/{sid}/keypoints/1/1", json={"x": 1.5, "y": 0.5}
    )
    assert bad.status_code == 422


def test_keypoint_edit_invalidates_alignment(sid, client):
    before = client.get(f"/sessions/{sid}/controls", params={"frame": 5}).json()
    reply = client.patch(
        f"/sessions/{sid}/keypoints/1/5", json={"x": 0.9, "y": 0.9}
    ).json()
    assert reply["changed"] is True
    after = client.get(f"/sessions/{sid}/controls", params={"frame": 5}).json()
    assert before["positions"] != after["positions"]


def test_keypoint_patch_idempotent(sid, client):
    first = client.patch(
        f"/sessions/{sid}/keypoints/2/4", json={"x": 0.25, "y": 0.75}
    ).json()
    assert first["changed"] is True
    second = client.patch(
        f"/sessions/{sid}/keypoints/2/4", json={"x": 0.25, "y": 0.75}
    ).json()
    assert second["changed"] is False
    assert second["revision"] == first["revision"]
    assert second["state_hash"] == first["state_hash"]


def test_params_invalidation_granularity(sid, client):
    url = f"/sessions/{sid}/params"
    assert client.put(url, json={"alpha": 3.0}).json()["invalidated"] == ["refine"]
    assert client.put(url, json={"e": 1.5}).json()["invalidated"] == ["align", "refine"]
    assert client.put(url, json={"n": 6}).json()["invalidated"] == [
        "track", "align", "refine",
    ]
    assert client.get(f"/sessions/{sid}/keypoints").json()["n"] == 6
    unchanged = client.put(url, json={"alpha": 3.0}).json()
    assert unchanged["changed"] is False
    assert unchanged["invalidated"] == []


def test_params_validation(sid, client):
    url = f"/sessions/{sid}/params"
    assert client.put(url, json={"alpha": -1}).status_code == 422
    assert client.put(url, json={"e": 0}).status_code == 422
    assert client.put(url, json={"k": 0}).status_code == 422
    assert client.put(url, json={"n": 0}).status_code == 422


def test_control_override_and_drop(sid, client):
    reply = client.patch(
        f"/sessions/{sid}/controls/3/2", json={"x": 0.5, "y": 0.5}
    ).json()
    assert reply["changed"] is True
    got = client.get(f"/sessions/{sid}/controls/3/2").json()
    assert (got["x"], got["y"]) == (0.5, 0.5)
    assert got["override"] is True
    assert client.get(f"/sessions/{sid}").json()["overrides"] == 1

    again = client.patch(
        f"/sessions/{sid}/controls/3/2", json={"x": 0.5, "y": 0.5}
    ).json()
    assert again["changed"] is False

    # refinement invalidation sweeps manual overrides away, and says so
    dropped = client.put(f"/sessions/{sid}/params", json={"alpha": 5.0}).json()
    assert dropped["dropped_overrides"] == 1
    got = client.get(f"/sessions/{sid}/controls/3/2").json()
    assert got["override"] is False
    assert client.get(f"/sessions/{sid}").json()["overrides"] == 0


def test_source_frame_png(sid, client, gif_bytes):
    png = client.get(f"/sessions/{sid}/source/1")
    assert png.status_code == 200
    assert png.headers["content-type"] == "image/png"
    assert png.content[:8] == b"\x89PNG\r\n\x1a\n"
    frames = client.get(f"/sessions/{sid}").json()["frames"]
    assert client.get(f"/sessions/{sid}/source/{frames + 1}").status_code == 404
    empty = client.post("/sessions").json()["id"]
    assert client.get(f"/sessions/{empty}/source/1").status_code == 409


def test_colors_render_only(sid, client):
    assert client.get(f"/sessions/{sid}").json()["colors"] == {
        "fill": "#000000", "background": "#ffffff",
    }
    plain = client.get(f"/sessions/{sid}/result").content
    client.patch(f"/sessions/{sid}/controls/3/2", json={"x": 0.5, "y": 0.5})

    reply = client.put(
        f"/sessions/{sid}/colors", json={"fill": "#cc2200"}
    ).json()
    assert reply["changed"] is True
    assert reply["invalidated"] == ["render"]
    assert reply["dropped_overrides"] == 0
    # render-only change: the manual control override survives
    assert client.get(f"/sessions/{sid}/controls/3/2").json()["override"] is True
    status = client.get(f"/sessions/{sid}").json()
    assert status["colors"]["fill"] == "#cc2200"
    assert status["colors"]["background"] == "#ffffff"
    assert client.get(f"/sessions/{sid}/result").content != plain

    again = client.put(f"/sessions/{sid}/colors", json={"fill": "#CC2200"}).json()
    assert again["changed"] is False
    assert client.put(
        f"/sessions/{sid}/colors", json={"background": "bright blue"}
    ).status_code == 422


def test_trajectory_source_round_trip(sid, client):
    url = f"/sessions/{sid}/params"
    assert client.get(f"/sessions/{sid}").json()["params"]["source"] == "driving_gif"
    reply = client.put(url, json={"source": "extracted_text"}).json()
    assert reply["changed"] is True
    assert reply["invalidated"] == ["align", "refine"]
    assert (
        client.get(f"/sessions/{sid}").json()["params"]["source"]
        == "extracted_text"
    )
    # the alternative source is stored but cannot compute anything
    blocked = client.get(f"/sessions/{sid}/result")
    assert blocked.status_code == 501
    assert "not implemented" in blocked.json()["detail"]
    assert client.put(url, json={"source": "telepathy"}).status_code == 422
    client.put(url, json={"source": "driving_gif"})
    assert client.get(f"/sessions/{sid}/result").status_code == 200


def test_setting_stored_alpha_still_sweeps_overrides(sid, client):
    # naming alpha asks for a fresh refinement, even at the stored value
    client.patch(f"/sessions/{sid}/controls/3/2", json={"x": 0.5, "y": 0.5})
    reply = client.put(f"/sessions/{sid}/params", json={"alpha": 2.0}).json()
    assert reply["changed"] is True
    assert reply["invalidated"] == ["refine"]
    assert reply["dropped_overrides"] == 1
    assert client.get(f"/sessions/{sid}/controls/3/2").json()["override"] is False
    # with nothing to sweep, the same call is a pure no-op
    again = client.put(f"/sessions/{sid}/params", json={"alpha": 2.0}).json()
    assert again["changed"] is False
    assert again["invalidated"] == []


def test_control_index_errors(sid, client):
    m = client.get(f"/sessions/{sid}/controls").json()["m"]
    assert client.get(f"/sessions/{sid}/controls/{m + 1}/1").status_code == 404
    assert client.get(f"/sessions/{sid}/controls/1/13").status_code == 404
    assert client.patch(
        f"/sessions/{sid}/controls/1/1", json={"x": -0.1, "y": 0.5}
    ).status_code == 422


def test_override_changes_render(sid, client):
    before = client.get(f"/sessions/{sid}/preview/2").content
    client.patch(f"/sessions/{sid}/controls/1/2", json={"x": 0.02, "y": 0.02})
    after = client.get(f"/sessions/{sid}/preview/2").content
    assert before != after
    assert after[:8] == b"\x89PNG\r\n\x1a\n"


def test_preview(sid, client):
    reply = client.get(f"/sessions/{sid}/preview/1")
    assert reply.status_code == 200
    assert reply.headers["content-type"] == "image/png"
    assert reply.content[:8] == b"\x89PNG\r\n\x1a\n"
    assert client.get(f"/sessions/{sid}/preview/13").status_code == 404
    assert client.get(f"/sessions/{sid}/preview/0").status_code == 404


def test_result_gif(sid, client, gif_bytes):
    reply = client.get(f"/sessions/{sid}/result")
    assert reply.status_code == 200
    assert reply.headers["content-type"] == "image/gif"
    out = decode_gif(reply.content)
    src = decode_gif(gif_bytes)
    assert out.num_frames == src.num_frames
    assert out.delays_cs == src.delays_cs
    assert out.loop_count == src.loop_count


def test_result_matches_batch_run(sid, client, gif_bytes, tmp_path):
    via_service = client.get(f"/sessions/{sid}/result").content
    gif_path = tmp_path / "in.gif"
    gif_path.write_bytes(gif_bytes)
    cfg = PipelineConfig(
        text="sy", font_path=FONT_PATH, gif_path=gif_path,
        out_path=tmp_path / "out.gif",
    )
    assert run_pipeline(cfg).gif_bytes == via_service


def test_export_svg(sid, client):
    doc = client.get(f"/sessions/{sid}/export/svg").json()
    assert len(doc["frames"]) == 12
    assert len(doc["delays_cs"]) == 12
    assert doc["names"][0] == "frame_0001.svg"
    assert doc["frames"][0].startswith("<svg")


def test_event_log(client, gif_bytes):
    sid = client.post("/sessions").json()["id"]
    client.post(f"/sessions/{sid}/gif", content=gif_bytes)
    client.put(f"/sessions/{sid}/text", json={"text": "sy"})
    client.patch(f"/sessions/{sid}/keypoints/1/2", json={"x": 0.4, "y": 0.4})
    events = client.get(f"/sessions/{sid}/events").json()["events"]
    assert [e["op"] for e in events] == ["gif", "text", "keypoint"]
    assert [e["revision"] for e in events] == [1, 2, 3]


def test_state_hash_tracks_inputs_not_history(client, gif_bytes):
    a = client.post("/sessions").json()["id"]
    b = client.post("/sessions").json()["id"]
    for s in (a, b):
        client.post(f"/sessions/{s}/gif", content=gif_bytes)
        client.put(f"/sessions/{s}/text", json={"text": "sy"})
    client.put(f"/sessions/{a}/params", json={"alpha": 3.0})
    client.put(f"/sessions/{a}/params", json={"alpha": 2.0})  # back again
    ha = client.get(f"/sessions/{a}").json()
    hb = client.get(f"/sessions/{b}").json()
    assert ha["state_hash"] == hb["state_hash"]
    assert ha["revision"] != hb["revision"]


def test_wordcloud_session(client, gif_bytes):
    sid = client.post("/sessions").json()["id"]
    client.post(f"/sessions/{sid}/gif", content=gif_bytes)
    reply = client.put(
        f"/sessions/{sid}/text", json={"text": "hey ho", "mode": "wordcloud"}
    ).json()
    assert reply["changed"] is True
    result = client.get(f"/sessions/{sid}/result")
    assert result.content[:6] == b"GIF89a"


def test_untrackable_animation_422(client):
    blank = np.full((2, 16, 16, 3), 255, dtype=np.uint8)
    sid = client.post("/sessions").json()["id"]
    client.post(f"/sessions/{sid}/gif", content=encode_gif(FrameSequence(blank, [5, 5], 0)))
    reply = client.get(f"/sessions/{sid}/keypoints")
    assert reply.status_code == 422


def test_concurrent_edits_all_land(sid, client):
    start = client.get(f"/sessions/{sid}").json()["revision"]

    def edit(i):
        client.patch(f"/sessions/{sid}/keypoints/{i}/3", json={"x": 0.1 * i, "y": 0.5})

    threads = [threading.Thread(target=edit, args=(i,)) for i in range(1, 9)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert client.get(f"/sessions/{sid}").json()["revision"] == start + 8
