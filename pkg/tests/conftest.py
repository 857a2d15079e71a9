import json

import pytest

from ctxgate.appmodel import load_sensitive_api_map, parse_package
from ctxgate.corpus import generate_corpus

QKSMS_DOC = {
    "format": "apkg/1",
    "package_id": "com.qksms",
    "declared_permissions": ["SEND_SMS"],
    "resources": {"hint": "Type a message"},
    "components": [
        {"component_id": "ComposeActivity", "kind": "Activity",
         "layout_id": "compose", "exported": True},
        {"component_id": "SyncService", "kind": "Service"},
    ],
    "layouts": {
        "compose": {
            "screen_size": [1080, 1920],
            "widgets": [
                {
                    "widget_id": "com.qksms:id/root",
                    "class_name": "LinearLayout",
                    "bounds": [0, 0, 1080, 1920],
                    "children": [
                        {"widget_id": "com.qksms:id/title", "class_name": "TextView",
                         "bounds": [0, 0, 360, 120]},
                        {"widget_id": "com.qksms:id/body", "class_name": "EditText",
                         "text": "@hint", "bounds": [40, 400, 1040, 1200]},
                        {"widget_id": "com.qksms:id/compose_button", "class_name": "Button",
                         "text": "Send", "bounds": [392, 1600, 688, 1752],
                         "flags": {"is_clickable": True}},
                    ],
                }
            ],
        }
    },
    "call_graph": {
        "edges": [
            ["ComposeView.onClick(View)", "SmsManager.sendTextMessage()"],
            ["ComposeFragment.onCreateView(LayoutInflater)", "ComposeView.setLabel(String)"],
        ],
        "handler_bindings": [
            ["com.qksms:id/compose_button", "onClick", "ComposeView.onClick(View)"]
        ],
        "runtime_assignments": [["com.qksms:id/title", "text", "Compose"]],
    },
}

RECORDER_DOC = {
    "format": "apkg/1",
    "package_id": "com.recorder",
    "declared_permissions": ["RECORD_AUDIO"],
    "components": [
        {"component_id": "RecordActivity", "kind": "Activity", "layout_id": "main"},
    ],
    "layouts": {
        "main": {
            "screen_size": [1080, 1920],
            "widgets": [
                {"widget_id": "com.recorder:id/title", "class_name": "TextView",
                 "text": "Recorder", "bounds": [0, 0, 360, 120]},
                {"widget_id": "com.recorder:id/timer", "class_name": "TextView",
                 "text": "00:00", "bounds": [392, 860, 688, 1060]},
                {"widget_id": "com.recorder:id/start", "class_name": "Button",
                 "text": "Start", "bounds": [60, 1600, 480, 1752],
                 "flags": {"is_clickable": True}},
                {"widget_id": "com.recorder:id/stop", "class_name": "Button",
                 "text": "Stop", "bounds": [600, 1600, 1020, 1752],
                 "flags": {"is_clickable": True}},
            ],
        }
    },
    "call_graph": {
        "edges": [["RecordView.onClick(View)", "AudioRecord.startRecording()"]],
        "handler_bindings": [
            ["com.recorder:id/start", "onClick", "RecordView.onClick(View)"]
        ],
    },
}

API_MAP_TEXT = """
SmsManager.sendTextMessage() -> SEND_SMS
AudioRecord.startRecording() -> RECORD_AUDIO
MediaRecorder.start() -> RECORD_AUDIO
LocationManager.getLastKnownLocation() -> LOCATION
TelephonyManager.getDeviceId() -> DEVICE_ID
"""


@pytest.fixture
def qksms_doc():
    return json.loads(json.dumps(QKSMS_DOC))


@pytest.fixture
def qksms_pkg():
    return parse_package(json.dumps(QKSMS_DOC))


@pytest.fixture
def recorder_pkg():
    return parse_package(json.dumps(RECORDER_DOC))


@pytest.fixture
def api_map():
    return load_sensitive_api_map(API_MAP_TEXT)


@pytest.fixture(scope="session")
def small_bundle():
    """40-app corpus shared by tests that only need structure, not scale."""
    return generate_corpus(seed=1, n_apps=40)


@pytest.fixture(scope="session")
def default_bundle():
    """The default evaluation corpus (seed=1, 200 apps)."""
    return generate_corpus(seed=1, n_apps=200)
