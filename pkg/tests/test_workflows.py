import pytest

from stagework import model
from stagework.auth import PermissionLevel
from stagework.errors import (
    InvalidWorkflow,
    IoFailure,
    PermissionDenied,
    UnknownProfile,
    UnknownUser,
    UnknownWorkflow,
)
from stagework.fixtures import docking_pipeline, single_echo


@pytest.fixture
def ws(services):
    return services.workflows


def _create(ws, owner, fixture=single_echo):
    definition, scripts = fixture()
    wf = ws.create(definition, owner=owner.username)
    return wf, scripts


class TestCrud:
    def test_create_assigns_identity(self, ws, alice):
        wf, _ = _create(ws, alice)
        assert wf.owner == "alice"
        assert wf.id
        got = ws.get(wf.id, alice)
        assert got.name == "echo-text"

    def test_create_rejects_invalid_definition(self, ws, alice):
        bad = {"name": "broken",
               "stages": [{"name": "s", "command_template": "echo ${ghost}"}]}
        with pytest.raises(InvalidWorkflow) as exc:
            ws.create(bad, owner="alice")
        assert any(v.code == "undeclared-placeholder"
                   for v in exc.value.violations)

    def test_create_rejects_malformed_structure(self, ws, alice):
        # Missing command_template, stage as a string, parameters as a dict:
        # structural garbage must surface as InvalidWorkflow, not KeyError.
        for bad in (
            {"name": "x", "stages": [{"name": "s"}]},
            {"name": "x", "stages": ["s"]},
            {"name": "x", "stages": [{"name": "s", "command_template": "true",
                                      "parameters": {"oops": 1}}]},
            {"name": "x", "stages": [{"name": "s", "command_template": "true",
                                      "dependencies": [{"upstream": "s"}]}]},
        ):
            with pytest.raises(InvalidWorkflow, match="malformed definition"):
                ws.create(bad, owner="alice")

    def test_update_rejects_malformed_structure(self, ws, alice):
        wf, _ = _create(ws, alice)
        with pytest.raises(InvalidWorkflow, match="malformed definition"):
            ws.update(wf.id, {"name": "x", "stages": [{"name": "s"}]}, alice)

    def test_client_supplied_id_is_ignored(self, ws, alice):
        definition, _ = single_echo()
        definition["id"] = "forged-id-123"
        wf = ws.create(definition, owner="alice")
        assert wf.id != "forged-id-123"

    def test_update_preserves_identity_and_bumps_modified(self, ws, alice):
        wf, _ = _create(ws, alice)
        definition = model.workflow_to_dict(wf, include_identity=False)
        definition["description"] = "edited"
        updated = ws.update(wf.id, definition, alice)
        assert updated.id == wf.id
        assert updated.owner == "alice"
        assert updated.created == wf.created
        assert updated.modified > wf.modified
        assert updated.description == "edited"

    def test_update_validates(self, ws, alice):
        wf, _ = _create(ws, alice)
        with pytest.raises(InvalidWorkflow):
            ws.update(wf.id, {"name": "", "stages": []}, alice)

    def test_delete_removes_everything(self, ws, alice):
        wf, _ = _create(ws, alice)
        ws.create_profile(wf.id, "p", {"message": "x"}, alice)
        ws.delete(wf.id, alice)
        with pytest.raises(UnknownWorkflow):
            ws.get(wf.id, alice)

    def test_unknown_workflow(self, ws, alice):
        with pytest.raises(UnknownWorkflow):
            ws.get("nope", alice)


class TestVisibility:
    def test_stranger_sees_not_found_not_denied(self, ws, alice, bob):
        wf, _ = _create(ws, alice)
        with pytest.raises(UnknownWorkflow):
            ws.get(wf.id, bob)

    def test_list_visible_filters(self, ws, alice, bob):
        wf, _ = _create(ws, alice)
        assert [w.id for w in ws.list_visible(alice)] == [wf.id]
        assert ws.list_visible(bob) == []

    def test_admin_sees_all(self, ws, alice, admin):
        wf, _ = _create(ws, alice)
        assert [w.id for w in ws.list_visible(admin)] == [wf.id]

    def test_share_view_allows_read_not_write(self, ws, alice, bob):
        wf, _ = _create(ws, alice)
        ws.share(wf.id, alice, target_user="bob", level=PermissionLevel.VIEW)
        assert ws.get(wf.id, bob).id == wf.id
        with pytest.raises(PermissionDenied):
            ws.update(wf.id, model.workflow_to_dict(wf), bob)

    def test_share_edit_allows_update(self, ws, alice, bob):
        wf, _ = _create(ws, alice)
        ws.share(wf.id, alice, target_user="bob", level=PermissionLevel.EDIT)
        definition = model.workflow_to_dict(wf, include_identity=False)
        definition["description"] = "bob was here"
        assert ws.update(wf.id, definition, bob).description == "bob was here"

    def test_share_with_group(self, ws, services, alice, bob):
        services.auth.create_group("team", "alice")
        services.auth.set_membership("team", "bob", True, requester=alice)
        bob = services.auth.resolve(services.auth.authenticate("bob", "bob-pw"))
        wf, _ = _create(ws, alice)
        ws.share(wf.id, alice, target_group="team", level=PermissionLevel.VIEW)
        assert ws.get(wf.id, bob).id == wf.id

    def test_share_requires_edit(self, ws, alice, bob):
        wf, _ = _create(ws, alice)
        with pytest.raises(UnknownWorkflow):
            ws.share(wf.id, bob, target_user="bob",
                     level=PermissionLevel.VIEW)

    def test_share_with_unknown_user(self, ws, alice):
        wf, _ = _create(ws, alice)
        with pytest.raises(UnknownUser):
            ws.share(wf.id, alice, target_user="ghost",
                     level=PermissionLevel.VIEW)


class TestScripts:
    def test_put_get_list(self, ws, alice):
        wf, scripts = _create(ws, alice, docking_pipeline)
        for name, text in scripts.items():
            ws.put_script(wf.id, name, text.encode(), alice)
        assert ws.list_scripts(wf.id, alice) == sorted(scripts)
        assert ws.get_script(wf.id, "run_dock.sh", alice) == \
            scripts["run_dock.sh"].encode()

    def test_unsafe_script_name(self, ws, alice):
        wf, _ = _create(ws, alice)
        with pytest.raises(IoFailure):
            ws.put_script(wf.id, "../evil.sh", b"x", alice)

    def test_missing_script(self, ws, alice):
        wf, _ = _create(ws, alice)
        with pytest.raises(IoFailure):
            ws.get_script(wf.id, "nope.sh", alice)

    def test_put_requires_edit(self, ws, alice, bob):
        wf, _ = _create(ws, alice)
        ws.share(wf.id, alice, target_user="bob", level=PermissionLevel.VIEW)
        with pytest.raises(PermissionDenied):
            ws.put_script(wf.id, "x.sh", b"x", bob)


class TestProfiles:
    def test_crud_round_trip(self, ws, alice):
        wf, _ = _create(ws, alice)
        profile = ws.create_profile(wf.id, "fast", {"message": "quick"}, alice)
        got = ws.get_profile(wf.id, profile.id, alice)
        assert got.values == {"message": "quick"}
        updated = ws.update_profile(wf.id, profile.id, "fast2",
                                    {"message": "v2"}, alice)
        assert updated.id == profile.id
        assert ws.get_profile(wf.id, profile.id, alice).values == \
            {"message": "v2"}
        ws.delete_profile(wf.id, profile.id, alice)
        with pytest.raises(UnknownProfile):
            ws.get_profile(wf.id, profile.id, alice)

    def test_profile_scoped_to_workflow(self, ws, alice):
        wf1, _ = _create(ws, alice)
        wf2, _ = _create(ws, alice)
        profile = ws.create_profile(wf1.id, "p", {}, alice)
        with pytest.raises(UnknownProfile):
            ws.get_profile(wf2.id, profile.id, alice)

    def test_list_profiles(self, ws, alice):
        wf, _ = _create(ws, alice)
        ws.create_profile(wf.id, "a", {}, alice)
        ws.create_profile(wf.id, "b", {}, alice)
        assert {p.name for p in ws.list_profiles(wf.id, alice)} == {"a", "b"}

    def test_create_requires_edit(self, ws, alice, bob):
        wf, _ = _create(ws, alice)
        ws.share(wf.id, alice, target_user="bob", level=PermissionLevel.RUN)
        with pytest.raises(PermissionDenied):
            ws.create_profile(wf.id, "p", {}, bob)


class TestArchiveRoundTrip:
    def test_export_import_between_users(self, ws, alice, bob):
        wf, scripts = _create(ws, alice, docking_pipeline)
        for name, text in scripts.items():
            ws.put_script(wf.id, name, text.encode(), alice)
        data = ws.export_archive(wf.id, alice)

        imported = ws.import_archive(data, "bob")
        assert imported.owner == "bob"
        assert imported.id != wf.id
        assert model.semantic_content(imported) == model.semantic_content(wf)
        assert ws.list_scripts(imported.id, bob) == sorted(scripts)

    def test_export_is_deterministic(self, ws, alice):
        wf, _ = _create(ws, alice)
        assert ws.export_archive(wf.id, alice) == \
            ws.export_archive(wf.id, alice)

    def test_export_requires_view(self, ws, alice, bob):
        wf, _ = _create(ws, alice)
        with pytest.raises(UnknownWorkflow):
            ws.export_archive(wf.id, bob)
