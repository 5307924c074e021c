"""Fixed generation constants used across pipeline, clients, and validation."""

# Every crafted positive prompt must end with this quality suffix.
PROMPT_SUFFIX = "masterpiece, sharp focus, highly detailed, cartoon"

# Fixed negative prompt sent with every image request. Byte-exact; do not reflow.
NEGATIVE_PROMPT = (
    "EasyNegative, blurry, (bad prompt:0.8), (artist name, signature, watermark:1.4), "
    "(ugly:1.2), (worst quality, poor detail:1.4), (deformed iris, deformed pupils, "
    "semi-realistic, CGI, 3d, render, sketch, drawing, anime:1.4), text, cropped, "
    "out of frame, worst quality, low quality, jpeg artifacts, ugly, duplicate, morbid, "
    "mutilated, extra fingers, mutated hands, poorly drawn hands, poorly drawn face, "
    "mutation, deformed, blurry, dehydrated, bad anatomy, bad proportions, extra limbs, "
    "cloned face, disfigured, gross proportions, malformed limbs, missing arms, "
    "missing legs, extra arms, extra legs, fused fingers, too many fingers, long neck, "
    "lowres, error, worst quality, low quality, out of frame, username, NSFW"
)

DEFAULT_STEPS = 50
DEFAULT_SAMPLER = "DPM++ 3M SDE Karras"
DEFAULT_REFINER_DENOISE = 0.5
DEFAULT_WIDTH = 1024
DEFAULT_HEIGHT = 1024

WORD_LIMIT = 500
SCENE_COUNT = 4
CHARACTER_CAP = 3
SCENE_CHARACTER_CAP = 2

MANIFEST_SCHEMA_VERSION = 1
DATASET_SCHEMA_VERSION = 1
FIXTURE_SCHEMA_VERSION = 1
