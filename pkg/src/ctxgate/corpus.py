"""Deterministic synthetic corpus.

Generates labeled app packages, request instances and replayable traces
from scenario templates: legal flows bind the sensitive call to a widget
and page that imply it, illegal flows break one of who/when/what, and
user-dependent flows are plausible either way. Everything derives from
the seed; two runs with equal parameters emit byte-identical output.

Simulated user profiles stand in for study participants: a preference per
user-dependent scenario plus a noise rate, including one always-deny user
and one near-random user.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .analyzer import ContextBinding, extract_bindings, serialize_bindings
from .appmodel import (
    AppPackage,
    PermissionType,
    SensitiveApiMap,
    default_sensitive_api_map,
    parse_package,
    serialize_package,
)
from .features import ContextFeatures, assemble_features
from .learners import Label
from .mediator import EventKind, TraceEvent, serialize_trace
from .render import render_window


class CorpusError(Exception):
    pass


class InstanceLabel(Enum):
    LEGAL = "Legal"
    ILLEGAL = "Illegal"
    USER_DEPENDENT = "UserDependent"


DEFAULT_MIX = {"Legal": 0.50, "Illegal": 0.35, "UserDependent": 0.15}

# tokens under this prefix are reserved as label markers for the leakage
# audit; no template pool or generated text may ever contain one
RESERVED_MARKER_PREFIX = "zmark"

BASE_SCREEN = (1080, 1920)

# slot name -> bounds on the base screen; every coordinate is divisible by
# four so the 0.5x/1.5x/2x screen variants stay integral
_SLOTS = {
    "title": (0, 0, 360, 120),
    "upper": (88, 300, 992, 420),
    "mid_left": (60, 700, 400, 800),
    "mid_right": (680, 700, 1020, 800),
    "center": (392, 860, 688, 1060),
    "low_left": (40, 1500, 340, 1580),
    "low_right": (740, 1500, 1040, 1580),
    "bottom_center": (392, 1600, 688, 1752),
    "bottom_strip": (0, 1772, 1080, 1920),
}

_SCREEN_SCALES = (0.5, 1.0, 1.5, 2.0)

_CHROME_TEXTS = (
    "OK", "Cancel", "Menu", "Back", "Next", "Help", "About", "Close",
    "Done", "Edit", "Share", "Open", "View", "Version 2.1",
)

_NEUTRAL_WORDS = (
    "aurora", "breeze", "cobalt", "dune", "ember", "fjord", "garnet",
    "harbor", "indigo", "juniper", "krypton", "lumen", "meadow", "nimbus",
    "onyx", "prism", "quartz", "raven", "sierra", "tundra",
)


@dataclass(frozen=True)
class TriggerSpec:
    id_stem: str
    class_name: str
    texts: tuple[str, ...]
    slot: str = "bottom_center"


@dataclass(frozen=True)
class ScenarioTemplate:
    name: str
    permission: PermissionType
    label: InstanceLabel
    violation: str | None
    titles: tuple[str, ...]
    theme_pools: tuple[tuple[str, ...], ...]
    entry_event: str  # listener event or lifecycle method
    api: str
    keywords: tuple[str, ...]
    trigger: TriggerSpec | None = None
    center_text: str | None = None
    decoy_trigger: TriggerSpec | None = None  # bound to an innocuous handler


_RECORDER_TITLES = ("Recorder", "Voice Recorder", "Audio Memo")
_RECORDER_THEME = (("Stop", "Pause"), ("Saved clips", "My recordings"))
_RECORDER_TRIGGER = TriggerSpec("record_button", "Button", ("Record", "Start recording"))

TEMPLATES: tuple[ScenarioTemplate, ...] = (
    # --- legal ---
    ScenarioTemplate(
        name="sms_compose",
        permission=PermissionType.SEND_SMS,
        label=InstanceLabel.LEGAL,
        violation=None,
        titles=("Compose", "New message", "Write message"),
        theme_pools=(("To", "Recipient"), ("Type a message", "Message text")),
        entry_event="onClick",
        api="SmsManager.sendTextMessage()",
        keywords=("send", "messag", "compos", "write"),
        trigger=TriggerSpec("send_button", "Button", ("Send", "Send message")),
    ),
    ScenarioTemplate(
        name="voice_recorder",
        permission=PermissionType.RECORD_AUDIO,
        label=InstanceLabel.LEGAL,
        violation=None,
        titles=_RECORDER_TITLES,
        theme_pools=_RECORDER_THEME,
        entry_event="onClick",
        api="AudioRecord.startRecording()",
        keywords=("record", "audio", "voic"),
        trigger=_RECORDER_TRIGGER,
        center_text="00:00",
    ),
    ScenarioTemplate(
        name="map_navigation",
        permission=PermissionType.LOCATION,
        label=InstanceLabel.LEGAL,
        violation=None,
        titles=("Map", "Navigation", "Nearby places"),
        theme_pools=(("Route", "Directions"), ("Traffic", "Satellite view")),
        entry_event="onClick",
        api="LocationManager.getLastKnownLocation()",
        keywords=("map", "navig", "rout", "direct", "nearbi"),
        trigger=TriggerSpec("locate_button", "Button", ("Locate me", "My location")),
    ),
    ScenarioTemplate(
        name="camera_capture",
        permission=PermissionType.CAMERA,
        label=InstanceLabel.LEGAL,
        violation=None,
        titles=("Camera", "Photo booth"),
        theme_pools=(("Flash", "Zoom"), ("Preview", "Timer shot")),
        entry_event="onClick",
        api="Camera.open()",
        keywords=("camera", "photo", "captur", "shutter"),
        trigger=TriggerSpec("shutter_button", "Button", ("Capture", "Take photo", "Shutter")),
    ),
    ScenarioTemplate(
        name="device_verify",
        permission=PermissionType.DEVICE_ID,
        label=InstanceLabel.LEGAL,
        violation=None,
        titles=("Account", "About phone", "Activation"),
        theme_pools=(("Registration status", "Licensed to"), ("Warranty", "Serial number")),
        entry_event="onClick",
        api="TelephonyManager.getDeviceId()",
        keywords=("devic", "verifi", "regist", "account", "activ"),
        trigger=TriggerSpec("verify_button", "Button", ("Verify device", "Register device")),
    ),
    ScenarioTemplate(
        name="bt_pairing",
        permission=PermissionType.BLUETOOTH,
        label=InstanceLabel.LEGAL,
        violation=None,
        titles=("Bluetooth", "Pair device"),
        theme_pools=(("Available devices", "Paired devices"), ("Headset", "Speaker")),
        entry_event="onClick",
        api="BluetoothAdapter.startDiscovery()",
        keywords=("bluetooth", "pair", "devic", "discoveri", "scan"),
        trigger=TriggerSpec("scan_button", "Button", ("Scan", "Search devices")),
    ),
    ScenarioTemplate(
        name="nfc_payment",
        permission=PermissionType.NFC,
        label=InstanceLabel.LEGAL,
        violation=None,
        titles=("Checkout", "Wallet", "Pay"),
        theme_pools=(("Total due", "Amount"), ("Card ending 4411", "Saved cards")),
        entry_event="onClick",
        api="NfcAdapter.enableForegroundDispatch()",
        keywords=("pai", "checkout", "wallet", "card", "total", "tap"),
        trigger=TriggerSpec("pay_button", "Button", ("Tap to pay", "Pay now")),
    ),
    # --- illegal ---
    # Each permission mixes two flavors: a copycat of the legal page where
    # only the activation differs (hard for count-based models) and a
    # mismatched-theme flow (hard for nothing, but it keeps any single
    # token from separating the classes on its own).
    ScenarioTemplate(
        name="flashlight_sms",
        permission=PermissionType.SEND_SMS,
        label=InstanceLabel.ILLEGAL,
        violation="what",
        titles=("Flashlight", "Torch"),
        theme_pools=(("Brightness", "Strobe"), ("Battery saver", "Auto off")),
        entry_event="onClick",
        api="SmsManager.sendTextMessage()",
        keywords=(),
        trigger=TriggerSpec("toggle_button", "Button", ("Toggle", "Turn on")),
    ),
    ScenarioTemplate(
        name="compose_touch_spam",
        permission=PermissionType.SEND_SMS,
        label=InstanceLabel.ILLEGAL,
        violation="when",
        titles=("Compose", "New message", "Write message"),
        theme_pools=(("To", "Recipient"), ("Type a message", "Message text")),
        entry_event="onTouch",
        api="SmsManager.sendTextMessage()",
        keywords=(),
        trigger=TriggerSpec("send_button", "Button", ("Send", "Send message")),
    ),
    ScenarioTemplate(
        # the recorder page again, but recording starts on a mere touch
        # instead of the click the page suggests; only "when" separates it
        name="touch_wiretap",
        permission=PermissionType.RECORD_AUDIO,
        label=InstanceLabel.ILLEGAL,
        violation="when",
        titles=_RECORDER_TITLES,
        theme_pools=_RECORDER_THEME,
        entry_event="onTouch",
        api="AudioRecord.startRecording()",
        keywords=(),
        trigger=_RECORDER_TRIGGER,
        center_text="00:00",
    ),
    ScenarioTemplate(
        name="walkie_premature",
        permission=PermissionType.RECORD_AUDIO,
        label=InstanceLabel.ILLEGAL,
        violation="when",
        titles=("Walkie Talkie", "Push to talk"),
        theme_pools=(("Press & Hold", "Hold to talk"), ("Channel 4", "Squad channel")),
        entry_event="onCreate",
        api="MediaRecorder.start()",
        keywords=(),
        decoy_trigger=TriggerSpec("talk_button", "Button", ("Talk", "Hold to talk")),
        center_text="00:00",
    ),
    ScenarioTemplate(
        name="notes_mic_snoop",
        permission=PermissionType.RECORD_AUDIO,
        label=InstanceLabel.ILLEGAL,
        violation="what",
        titles=("Notes", "Memo pad"),
        theme_pools=(("New note", "My notes"), ("Checklist", "Reminders")),
        entry_event="onClick",
        api="AudioRecord.startRecording()",
        keywords=(),
        trigger=TriggerSpec("save_note_button", "Button", ("Save note", "Keep")),
    ),
    ScenarioTemplate(
        name="weather_ad_location",
        permission=PermissionType.LOCATION,
        label=InstanceLabel.ILLEGAL,
        violation="who",
        titles=("Weather", "Forecast"),
        theme_pools=(("Sunny 24°", "Cloudy 18°"), ("Humidity 40%", "Wind 12 km/h")),
        entry_event="onClick",
        api="LocationManager.requestLocationUpdates()",
        keywords=(),
        trigger=TriggerSpec(
            "ad_banner", "AdBannerView",
            ("Sponsored", "Hot deals nearby", "Tap to win"),
            slot="bottom_strip",
        ),
    ),
    ScenarioTemplate(
        name="map_touch_tracker",
        permission=PermissionType.LOCATION,
        label=InstanceLabel.ILLEGAL,
        violation="when",
        titles=("Map", "Navigation", "Nearby places"),
        theme_pools=(("Route", "Directions"), ("Traffic", "Satellite view")),
        entry_event="onTouch",
        api="LocationManager.getLastKnownLocation()",
        keywords=(),
        trigger=TriggerSpec("locate_button", "Button", ("Locate me", "My location")),
    ),
    ScenarioTemplate(
        # an ordinary button on an innocuous page: keeps plain click+button
        # structure from implying legality on its own
        name="calc_location_grab",
        permission=PermissionType.LOCATION,
        label=InstanceLabel.ILLEGAL,
        violation="what",
        titles=("Calculator", "Unit converter"),
        theme_pools=(("Result", "History"), ("Scientific", "Memory")),
        entry_event="onClick",
        api="LocationManager.getLastKnownLocation()",
        keywords=(),
        trigger=TriggerSpec("equals_button", "Button", ("Calculate", "Convert")),
    ),
    ScenarioTemplate(
        name="game_camera_snoop",
        permission=PermissionType.CAMERA,
        label=InstanceLabel.ILLEGAL,
        violation="what",
        titles=("Puzzle Game", "Arcade"),
        theme_pools=(("Score 120", "Level 3"), ("Leaderboard", "Daily bonus")),
        entry_event="onClick",
        api="Camera.open()",
        keywords=(),
        trigger=TriggerSpec("play_button", "Button", ("Play", "Continue")),
    ),
    ScenarioTemplate(
        name="shutter_longpress_snoop",
        permission=PermissionType.CAMERA,
        label=InstanceLabel.ILLEGAL,
        violation="when",
        titles=("Camera", "Photo booth"),
        theme_pools=(("Flash", "Zoom"), ("Preview", "Timer shot")),
        entry_event="onLongClick",
        api="Camera.open()",
        keywords=(),
        trigger=TriggerSpec("shutter_button", "Button", ("Capture", "Take photo", "Shutter")),
    ),
    ScenarioTemplate(
        name="game_deviceid",
        permission=PermissionType.DEVICE_ID,
        label=InstanceLabel.ILLEGAL,
        violation="what",
        titles=("Puzzle Game", "High scores"),
        theme_pools=(("Coins 300", "Level up"), ("Daily bonus", "Leaderboard")),
        entry_event="onClick",
        api="TelephonyManager.getDeviceId()",
        keywords=(),
        trigger=TriggerSpec("play_button", "Button", ("Play", "Continue")),
    ),
    ScenarioTemplate(
        name="settings_touch_miner",
        permission=PermissionType.DEVICE_ID,
        label=InstanceLabel.ILLEGAL,
        violation="when",
        titles=("Account", "About phone", "Activation"),
        theme_pools=(("Registration status", "Licensed to"), ("Warranty", "Serial number")),
        entry_event="onTouch",
        api="TelephonyManager.getDeviceId()",
        keywords=(),
        trigger=TriggerSpec("verify_button", "Button", ("Verify device", "Register device")),
    ),
    ScenarioTemplate(
        name="news_ad_bt",
        permission=PermissionType.BLUETOOTH,
        label=InstanceLabel.ILLEGAL,
        violation="who",
        titles=("News Reader", "Headlines"),
        theme_pools=(("Top stories", "Latest"), ("Politics", "Sports")),
        entry_event="onClick",
        api="BluetoothAdapter.startDiscovery()",
        keywords=(),
        trigger=TriggerSpec(
            "ad_banner", "AdBannerView",
            ("Sponsored", "Free coupons", "Tap to win"),
            slot="bottom_strip",
        ),
    ),
    ScenarioTemplate(
        name="wallpaper_nfc",
        permission=PermissionType.NFC,
        label=InstanceLabel.ILLEGAL,
        violation="when",
        titles=("Wallpapers", "Themes"),
        theme_pools=(("Gallery", "Trending"), ("Apply", "Preview")),
        entry_event="onCreate",
        api="NfcAdapter.enableForegroundDispatch()",
        keywords=(),
    ),
    # --- user-dependent ---
    ScenarioTemplate(
        name="camera_geotag",
        permission=PermissionType.LOCATION,
        label=InstanceLabel.USER_DEPENDENT,
        violation=None,
        titles=("Camera", "Photo booth"),
        theme_pools=(("Preview", "Filters"), ("Gallery", "Albums")),
        entry_event="onClick",
        api="LocationManager.getLastKnownLocation()",
        keywords=("camera", "photo"),
        trigger=TriggerSpec("save_button", "Button", ("Save photo", "Keep photo")),
    ),
    ScenarioTemplate(
        name="review_upload",
        permission=PermissionType.LOCATION,
        label=InstanceLabel.USER_DEPENDENT,
        violation=None,
        titles=("Rate product", "Review", "Feedback"),
        theme_pools=(("Stars", "Your rating"), ("Comments", "Write your review")),
        entry_event="onClick",
        api="LocationManager.requestLocationUpdates()",
        keywords=("review", "rate"),
        trigger=TriggerSpec("upload_button", "Button", ("Upload", "Submit review")),
    ),
    ScenarioTemplate(
        name="fitness_route",
        permission=PermissionType.LOCATION,
        label=InstanceLabel.USER_DEPENDENT,
        violation=None,
        titles=("Workout", "Run tracker", "Fitness"),
        theme_pools=(("Calories", "Steps"), ("Duration", "Pace")),
        entry_event="onClick",
        api="LocationManager.getLastKnownLocation()",
        keywords=("workout", "run", "fit"),
        trigger=TriggerSpec("start_button", "Button", ("Start workout", "Begin run")),
    ),
)

USER_DEPENDENT_SCENARIOS = tuple(
    t.name for t in TEMPLATES if t.label is InstanceLabel.USER_DEPENDENT
)


@dataclass(frozen=True)
class CorpusInstance:
    instance_id: str
    package_id: str
    activity_id: str
    site_id: str
    scenario: str
    permission: PermissionType
    label: InstanceLabel
    features: ContextFeatures

    def to_doc(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "package_id": self.package_id,
            "activity_id": self.activity_id,
            "site_id": self.site_id,
            "scenario": self.scenario,
            "permission": self.permission.value,
            "label": self.label.value,
            "features": self.features.to_doc(),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "CorpusInstance":
        return cls(
            instance_id=doc["instance_id"],
            package_id=doc["package_id"],
            activity_id=doc["activity_id"],
            site_id=doc["site_id"],
            scenario=doc["scenario"],
            permission=PermissionType(doc["permission"]),
            label=InstanceLabel(doc["label"]),
            features=ContextFeatures.from_doc(doc["features"]),
        )

    def train_label(self, user_allows: bool | None = None) -> Label:
        if self.label is InstanceLabel.LEGAL:
            return Label.LEGAL
        if self.label is InstanceLabel.ILLEGAL:
            return Label.ILLEGAL
        if user_allows is None:
            raise CorpusError(f"{self.instance_id} is user-dependent; a decision is required")
        return Label.LEGAL if user_allows else Label.ILLEGAL


@dataclass
class CorpusBundle:
    seed: int
    n_apps: int
    mix: dict[str, float]
    packages: list[AppPackage]
    app_scenarios: dict[str, str]  # package_id -> template name
    instances: list[CorpusInstance]
    bindings: dict[str, list[ContextBinding]]  # package_id -> gold bindings
    traces: dict[str, list[TraceEvent]]

    def training_instances(self) -> list[CorpusInstance]:
        return [i for i in self.instances if i.label is not InstanceLabel.USER_DEPENDENT]

    def user_dependent_instances(self) -> list[CorpusInstance]:
        return [i for i in self.instances if i.label is InstanceLabel.USER_DEPENDENT]

    def package(self, package_id: str) -> AppPackage:
        for p in self.packages:
            if p.package_id == package_id:
                return p
        raise CorpusError(f"no package {package_id!r} in corpus")


def _largest_remainder(total: int, fractions: list[float]) -> list[int]:
    raw = [total * f for f in fractions]
    counts = [int(r) for r in raw]
    remainder = total - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:remainder]:
        counts[i] += 1
    return counts


def _apportion_templates(n_apps: int, mix: dict[str, float]) -> list[ScenarioTemplate]:
    if set(mix) != {l.value for l in InstanceLabel}:
        raise CorpusError(f"mix must cover exactly the labels {[l.value for l in InstanceLabel]}")
    if any(v < 0 for v in mix.values()) or abs(sum(mix.values()) - 1.0) > 1e-9:
        raise CorpusError("mix fractions must be non-negative and sum to 1")
    labels = [InstanceLabel.LEGAL, InstanceLabel.ILLEGAL, InstanceLabel.USER_DEPENDENT]
    label_counts = _largest_remainder(n_apps, [mix[l.value] for l in labels])
    assignment: list[ScenarioTemplate] = []
    for label, count in zip(labels, label_counts):
        group = [t for t in TEMPLATES if t.label is label]
        base, rem = divmod(count, len(group))
        for i, template in enumerate(group):
            assignment.extend([template] * (base + (1 if i < rem else 0)))
    covered = {t.permission for t in assignment}
    if covered != set(PermissionType):
        missing = sorted(p.value for p in set(PermissionType) - covered)
        raise CorpusError(
            f"invalid mix: permissions {missing} are not covered; "
            "raise n_apps or adjust the fractions"
        )
    return assignment


def _scale(v: int, s: float) -> int:
    scaled = v * s
    return int(round(scaled))


def _slot_bounds(slot: str, s: float, rng: random.Random) -> list[int]:
    x0, y0, x1, y1 = (_scale(v, s) for v in _SLOTS[slot])
    w, h = _scale(BASE_SCREEN[0], s), _scale(BASE_SCREEN[1], s)
    # jitter is small next to the slots' distance from cell boundaries, so
    # the grid cell never changes; clamp keeps bounds on screen
    dx = max(-x0, min(2 * rng.randint(-10, 10), w - x1))
    dy = max(-y0, min(2 * rng.randint(-10, 10), h - y1))
    return [x0 + dx, y0 + dy, x1 + dx, y1 + dy]


@dataclass
class _InstanceRecipe:
    activity_id: str
    trigger_id: str | None
    event: str
    entry_sig: str
    chain: list[str]
    api: str


def _build_app_doc(
    template: ScenarioTemplate, app_idx: int, seed: int
) -> tuple[dict, list[_InstanceRecipe]]:
    rng = random.Random(f"{seed}:{app_idx}:{template.name}")
    word = rng.choice(_NEUTRAL_WORDS)
    package_id = f"com.{word}.app{app_idx:03d}"
    scale = rng.choice(_SCREEN_SCALES)
    screen = [_scale(BASE_SCREEN[0], scale), _scale(BASE_SCREEN[1], scale)]

    components = []
    layouts = {}
    resources: dict[str, str] = {}
    nodes: list[str] = []
    edges: list[list[str]] = []
    handler_bindings: list[list[str]] = []
    runtime_assignments: list[list[str]] = []
    recipes: list[_InstanceRecipe] = []

    n_instances = rng.randint(8, 12)
    for n in range(n_instances):
        activity = f"Screen{n}Activity"
        layout_id = f"screen{n}_layout"
        components.append(
            {"component_id": activity, "kind": "Activity", "layout_id": layout_id,
             "exported": rng.random() < 0.5}
        )
        children: list[dict] = []
        used_slots = {"title"}

        title = rng.choice(template.titles)
        title_widget: dict = {
            "widget_id": f"{package_id}:id/title{n}",
            "class_name": "TextView",
            "bounds": _slot_bounds("title", scale, rng),
        }
        style = rng.random()
        if style < 0.3:
            # title text only appears once the window is rendered
            runtime_assignments.append([title_widget["widget_id"], "text", title])
        elif style < 0.5:
            res_key = f"title_{n}"
            resources[res_key] = title
            title_widget["text"] = f"@{res_key}"
        else:
            title_widget["text"] = title
        children.append(title_widget)

        if template.center_text is not None:
            children.append(
                {
                    "widget_id": f"{package_id}:id/readout{n}",
                    "class_name": "TextView",
                    "text": template.center_text,
                    "bounds": _slot_bounds("center", scale, rng),
                }
            )
            used_slots.add("center")

        theme_slots = ["upper", "mid_left", "mid_right"]
        for pool in template.theme_pools:
            slot = theme_slots.pop(0)
            used_slots.add(slot)
            children.append(
                {
                    "widget_id": f"{package_id}:id/{slot}{n}",
                    "class_name": "TextView",
                    "text": rng.choice(pool),
                    "bounds": _slot_bounds(slot, scale, rng),
                }
            )

        trigger_id = None
        for spec in (template.trigger, template.decoy_trigger):
            if spec is None:
                continue
            widget_id = f"{package_id}:id/{spec.id_stem}{n}"
            children.append(
                {
                    "widget_id": widget_id,
                    "class_name": spec.class_name,
                    "text": rng.choice(spec.texts),
                    "bounds": _slot_bounds(spec.slot, scale, rng),
                    "flags": {"is_clickable": True},
                }
            )
            used_slots.add(spec.slot)
            if spec is template.trigger:
                trigger_id = widget_id

        free_slots = [s for s in _SLOTS if s not in used_slots and s != "bottom_strip"]
        rng.shuffle(free_slots)
        for k in range(rng.randint(1, min(3, len(free_slots)))):
            slot = free_slots[k]
            children.append(
                {
                    "widget_id": f"{package_id}:id/extra{n}_{k}",
                    "class_name": "TextView",
                    "text": rng.choice(_CHROME_TEXTS),
                    "bounds": _slot_bounds(slot, scale, rng),
                }
            )

        layouts[layout_id] = {
            "screen_size": screen,
            "widgets": [
                {
                    "widget_id": f"{package_id}:id/root{n}",
                    "class_name": "FrameLayout",
                    "bounds": [0, 0, screen[0], screen[1]],
                    "children": children,
                }
            ],
        }

        # wire the sensitive chain for this screen
        helpers = [f"Screen{n}Logic.step{k}()" for k in range(rng.randint(0, 2))]
        if template.entry_event in ("onClick", "onTouch", "onLongClick",
                                    "onCheckedChanged", "onItemSelected", "onScroll"):
            entry_sig = f"Screen{n}Handler.{template.entry_event}(View)"
            handler_bindings.append([trigger_id, template.entry_event, entry_sig])
        else:
            entry_sig = f"{activity}.{template.entry_event}()"
        chain = [entry_sig] + helpers + [template.api]
        for a, b in zip(chain, chain[1:]):
            edges.append([a, b])
        if template.decoy_trigger is not None:
            decoy_sig = f"Screen{n}Decoy.onClick(View)"
            handler_bindings.append(
                [f"{package_id}:id/{template.decoy_trigger.id_stem}{n}", "onClick", decoy_sig]
            )
            edges.append([decoy_sig, f"Screen{n}Audio.showChannel()"])
        # inert helper edges for texture
        for k in range(rng.randint(0, 2)):
            edges.append([f"Screen{n}Util.helper{k}()", f"Screen{n}Util.helper{k}b()"])

        recipes.append(
            _InstanceRecipe(
                activity_id=activity,
                trigger_id=trigger_id,
                event=template.entry_event,
                entry_sig=entry_sig,
                chain=chain,
                api=template.api,
            )
        )

    doc = {
        "format": "apkg/1",
        "package_id": package_id,
        "declared_permissions": [template.permission.value],
        "components": components,
        "layouts": layouts,
        "call_graph": {
            "nodes": nodes,
            "edges": edges,
            "handler_bindings": handler_bindings,
            "runtime_assignments": runtime_assignments,
        },
    }
    if resources:
        doc["resources"] = resources
    return doc, recipes


def _trace_for_app(pkg: AppPackage, recipes: list[_InstanceRecipe]) -> list[TraceEvent]:
    from .appmodel import MethodSig

    events = []
    t = 0
    for recipe in recipes:
        events.append(TraceEvent(time=t, kind=EventKind.LAUNCH_ACTIVITY,
                                 package=pkg.package_id, component=recipe.activity_id))
        t += 1
        if recipe.trigger_id is not None:
            events.append(TraceEvent(time=t, kind=EventKind.LISTENER_INVOKE,
                                     package=pkg.package_id, widget_id=recipe.trigger_id))
            t += 1
        events.append(
            TraceEvent(
                time=t,
                kind=EventKind.SENSITIVE_CALL,
                package=pkg.package_id,
                stack=tuple(MethodSig.parse(s) for s in recipe.chain),
            )
        )
        t += 1
        events.append(TraceEvent(time=t, kind=EventKind.STOP_COMPONENT,
                                 package=pkg.package_id, component=recipe.activity_id))
        t += 1
    return events


def generate_corpus(
    seed: int,
    n_apps: int,
    template_mix: dict[str, float] | None = None,
    api_map: SensitiveApiMap | None = None,
) -> CorpusBundle:
    if n_apps < 1:
        raise CorpusError("n_apps must be at least 1")
    mix = dict(template_mix) if template_mix is not None else dict(DEFAULT_MIX)
    api_map = api_map or default_sensitive_api_map()
    assignment = _apportion_templates(n_apps, mix)
    rng = random.Random(f"{seed}:assign")
    rng.shuffle(assignment)

    packages: list[AppPackage] = []
    app_scenarios: dict[str, str] = {}
    instances: list[CorpusInstance] = []
    all_bindings: dict[str, list[ContextBinding]] = {}
    traces: dict[str, list[TraceEvent]] = {}

    for app_idx, template in enumerate(assignment):
        doc, recipes = _build_app_doc(template, app_idx, seed)
        pkg = parse_package(json.dumps(doc))
        packages.append(pkg)
        app_scenarios[pkg.package_id] = template.name
        bindings = extract_bindings(pkg, api_map)
        all_bindings[pkg.package_id] = bindings
        traces[pkg.package_id] = _trace_for_app(pkg, recipes)

        by_activity: dict[str, ContextBinding] = {}
        for b in bindings:
            if b.host_activity is None or b.host_activity in by_activity:
                raise CorpusError(
                    f"{pkg.package_id}: expected exactly one binding per screen"
                )
            by_activity[b.host_activity] = b
        for recipe in recipes:
            binding = by_activity[recipe.activity_id]
            snapshot = render_window(pkg, recipe.activity_id, rendered_at=0)
            features = assemble_features(snapshot, binding.entries, binding.trigger_widget)
            instances.append(
                CorpusInstance(
                    instance_id=f"{pkg.package_id}/{recipe.activity_id}",
                    package_id=pkg.package_id,
                    activity_id=recipe.activity_id,
                    site_id=binding.site.site_id,
                    scenario=template.name,
                    permission=template.permission,
                    label=template.label,
                    features=features,
                )
            )

    return CorpusBundle(
        seed=seed,
        n_apps=n_apps,
        mix=mix,
        packages=packages,
        app_scenarios=app_scenarios,
        instances=instances,
        bindings=all_bindings,
        traces=traces,
    )


def make_overlay_attack_traces(
    bundle: CorpusBundle, n: int, seed: int
) -> list[tuple[str, list[TraceEvent]]]:
    """Spoofing traces: a foreign trusted-looking widget is overlaid right
    before the app fires its sensitive call from a lifecycle entry."""
    from .appmodel import MethodSig

    hosts = [
        p for p in bundle.packages
        if bundle.app_scenarios[p.package_id]
        in ("game_camera_snoop", "game_deviceid", "wallpaper_nfc", "walkie_premature")
    ]
    if not hosts:
        raise CorpusError("corpus has no lifecycle-violation apps to attack")
    rng = random.Random(f"{seed}:overlay")
    out = []
    for i in range(n):
        pkg = hosts[rng.randrange(len(hosts))]
        binding = bundle.bindings[pkg.package_id][0]
        activity = binding.host_activity
        stack = tuple(
            MethodSig.parse(s)
            for s in (f"{activity}.onCreate()", binding.site.api.signature)
        )
        events = [
            TraceEvent(time=0, kind=EventKind.LAUNCH_ACTIVITY,
                       package=pkg.package_id, component=activity),
            TraceEvent(time=1, kind=EventKind.OVERLAY_SHOW,
                       package="com.spoof.overlay",
                       widget_id="com.spoof.overlay:id/trusted_button"),
            TraceEvent(time=2, kind=EventKind.SENSITIVE_CALL,
                       package=pkg.package_id, stack=stack),
        ]
        out.append((pkg.package_id, events))
    return out


# --------------------------------------------------------------------------
# simulated users


@dataclass(frozen=True)
class UserProfile:
    profile_id: str
    preferences: dict[str, float]  # scenario -> allow probability
    noise_rate: float

    def __post_init__(self):
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise_rate must be in [0, 1]")
        if any(not 0.0 <= p <= 1.0 for p in self.preferences.values()):
            raise ValueError("preferences must be probabilities")


ALWAYS_DENY_PROFILE = "user00"
NEAR_RANDOM_PROFILE = "user01"


def make_profiles(
    seed: int, noise_rate: float = 0.0, count: int = 24,
    scenarios: tuple[str, ...] = USER_DEPENDENT_SCENARIOS,
) -> list[UserProfile]:
    """Seeded population: one always-deny outlier, one near-random user,
    the rest with firm per-scenario preferences."""
    profiles = [
        UserProfile(ALWAYS_DENY_PROFILE, {s: 0.0 for s in scenarios}, noise_rate),
        UserProfile(NEAR_RANDOM_PROFILE, {s: 0.5 for s in scenarios}, noise_rate),
    ]
    for i in range(2, count):
        rng = random.Random(f"{seed}:profile:{i}")
        prefs = {s: float(rng.random() < 0.5) for s in scenarios}
        profiles.append(UserProfile(f"user{i:02d}", prefs, noise_rate))
    return profiles


def simulate_user(profile: UserProfile, instance: CorpusInstance, rng: random.Random) -> bool:
    if instance.label is not InstanceLabel.USER_DEPENDENT:
        raise CorpusError(
            f"{instance.instance_id} is {instance.label.value}; only "
            "user-dependent instances go to the user"
        )
    p = profile.preferences.get(instance.scenario, 0.5)
    allow = rng.random() < p
    if rng.random() < profile.noise_rate:
        allow = not allow
    return allow


# --------------------------------------------------------------------------
# corpus on disk


def write_corpus(bundle: CorpusBundle, out_dir: str | Path) -> None:
    out = Path(out_dir)
    (out / "packages").mkdir(parents=True, exist_ok=True)
    (out / "bindings").mkdir(exist_ok=True)
    (out / "traces").mkdir(exist_ok=True)
    for pkg in bundle.packages:
        (out / "packages" / f"{pkg.package_id}.apkg").write_text(
            serialize_package(pkg), encoding="utf-8"
        )
        (out / "bindings" / f"{pkg.package_id}.bind").write_text(
            serialize_bindings(bundle.bindings[pkg.package_id]), encoding="utf-8"
        )
        (out / "traces" / f"{pkg.package_id}.trace").write_text(
            serialize_trace(bundle.traces[pkg.package_id]), encoding="utf-8"
        )
    with open(out / "instances.jsonl", "w", encoding="utf-8") as f:
        for inst in bundle.instances:
            f.write(json.dumps(inst.to_doc()) + "\n")
    manifest = {
        "seed": bundle.seed,
        "n_apps": bundle.n_apps,
        "mix": bundle.mix,
        "apps": [
            {
                "package_id": p.package_id,
                "scenario": bundle.app_scenarios[p.package_id],
                "label": next(
                    t.label.value for t in TEMPLATES
                    if t.name == bundle.app_scenarios[p.package_id]
                ),
            }
            for p in bundle.packages
        ],
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


def load_corpus(corpus_dir: str | Path) -> CorpusBundle:
    from .analyzer import parse_bindings
    from .mediator import parse_trace

    root = Path(corpus_dir)
    manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    packages = []
    app_scenarios = {}
    bindings = {}
    traces = {}
    for entry in manifest["apps"]:
        pid = entry["package_id"]
        packages.append(
            parse_package((root / "packages" / f"{pid}.apkg").read_text(encoding="utf-8"))
        )
        app_scenarios[pid] = entry["scenario"]
        bindings[pid] = parse_bindings(
            (root / "bindings" / f"{pid}.bind").read_text(encoding="utf-8")
        )
        traces[pid] = parse_trace(
            (root / "traces" / f"{pid}.trace").read_text(encoding="utf-8")
        )
    instances = [
        CorpusInstance.from_doc(json.loads(line))
        for line in (root / "instances.jsonl").read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    return CorpusBundle(
        seed=manifest["seed"],
        n_apps=manifest["n_apps"],
        mix=manifest["mix"],
        packages=packages,
        app_scenarios=app_scenarios,
        instances=instances,
        bindings=bindings,
        traces=traces,
    )


def audit_label_leakage(bundle: CorpusBundle) -> list[str]:
    """Texts and identifiers must never carry reserved label-marker tokens."""
    offenders = []
    for pkg in bundle.packages:
        for layout in pkg.layouts.values():
            for w in layout.walk():
                blob = " ".join(filter(None, (w.widget_id, w.class_name, w.text or "")))
                if RESERVED_MARKER_PREFIX in blob.lower():
                    offenders.append(f"{pkg.package_id}:{w.widget_id}")
        for value in pkg.resources.values():
            if RESERVED_MARKER_PREFIX in value.lower():
                offenders.append(f"{pkg.package_id}:resource")
    return offenders
