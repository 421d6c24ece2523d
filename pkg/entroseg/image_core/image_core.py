"""
The image_core module contains the pixel-grid types shared by the rest of the library, and the functions used to read or write them.

Three kinds of images are used:
* GrayImage : 8-bit intensities, what is read from disk and what is written back.
* FloatImage : real values, such as the probability image or the entropy image, before they are quantized for display.
* BinaryImage : boolean maps, used for edge maps.

Images are immutable once created, their pixels are stored as a read-only numpy array of shape (height, width), in row-major order.
The mandatory interchange format is binary PGM (P5), PNG is available through Pillow for 8-bit grayscale images.
"""
import io
import logging
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

logger = logging.getLogger(__name__)

PGM_MAGIC = b"P5"
PGM_WHITESPACE = b" \t\n\r\v\f"


class PgmError(ValueError):
    """Raised when bytes cannot be decoded as a binary PGM image."""


class PgmHeaderError(PgmError):
    """The PGM header is malformed : wrong magic number, missing or non-numeric fields."""


class PgmMaxvalError(PgmError):
    """The PGM maxval is outside of [1, 255], only 8-bit images are supported."""


class PgmTruncatedError(PgmError):
    """The PGM body holds fewer bytes than width * height."""


class GeometryError(ValueError):
    """Raised when images, blocks or label maps do not share the expected dimensions."""


def _frozen_array(values, dtype):
    array = np.array(values, dtype=dtype, copy=True)
    if array.ndim != 2:
        raise ValueError("Image data must be 2-dimensional (height, width), got shape " + str(array.shape))
    if array.shape[0] < 1 or array.shape[1] < 1:
        raise ValueError("Image dimensions must be at least 1x1, got shape " + str(array.shape))
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GrayImage:
    """
    A grid of 8-bit intensities in [0, 255].

    :param numpy.ndarray pixels: Array of shape (height, width), converted to uint8.
    """
    pixels: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.pixels)
        if values.dtype.kind == "f" and not np.all(np.isfinite(values)):
            raise ValueError("GrayImage values must be finite")
        if values.size and (values.min() < 0 or values.max() > 255):
            raise ValueError("GrayImage values must be in [0, 255], got range [" + str(values.min()) + ", " + str(values.max()) + "]")
        object.__setattr__(self, "pixels", _frozen_array(values, np.uint8))

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def data(self):
        """Row-major sequence of intensities."""
        return self.pixels.ravel()

    @classmethod
    def from_data(cls, width, height, data):
        """Builds an image from a flat row-major sequence of width * height values."""
        data = np.asarray(data)
        if data.size != width * height:
            raise GeometryError("Expected " + str(width * height) + " values for a " + str(width) + "x" + str(height) + " image, got " + str(data.size))
        return cls(data.reshape(height, width))

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


@dataclass(frozen=True, eq=False)
class FloatImage:
    """
    A grid of finite, non-negative real values, such as a probability image or an entropy image.

    :param numpy.ndarray pixels: Array of shape (height, width), converted to float64.
    """
    pixels: np.ndarray

    def __post_init__(self):
        values = _frozen_array(self.pixels, np.float64)
        if not np.all(np.isfinite(values)):
            raise ValueError("FloatImage values must be finite (no NaN or Inf)")
        if np.any(values < 0):
            raise ValueError("FloatImage values must be non-negative, got minimum " + str(values.min()))
        object.__setattr__(self, "pixels", values)

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def data(self):
        return self.pixels.ravel()

    def __eq__(self, other):
        if not isinstance(other, FloatImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """A grid of booleans, True marks a pixel belonging to an edge."""
    pixels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pixels", _frozen_array(self.pixels, bool))

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def data(self):
        return self.pixels.ravel()

    def __eq__(self, other):
        if not isinstance(other, BinaryImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


def check_same_geometry(first, second, what="images"):
    """Raises GeometryError if two images do not have the same width and height."""
    if (first.width, first.height) != (second.width, second.height):
        raise GeometryError("Dimension mismatch between " + what + ": "
                            + str(first.width) + "x" + str(first.height) + " vs "
                            + str(second.width) + "x" + str(second.height))


def round_half_up(values):
    """Rounds halves upwards (0.5 -> 1, 127.5 -> 128), used for every float to integer pixel conversion."""
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


# PGM (P5) format
def _next_token(data, position):
    """Returns the next header token and the position right after it, skipping whitespace and '#' comments."""
    length = len(data)
    while position < length:
        byte = data[position:position + 1]
        if byte == b"#":
            end = data.find(b"\n", position)
            if end < 0:
                raise PgmHeaderError("PGM header ends inside a comment")
            position = end + 1
        elif byte in PGM_WHITESPACE:
            position += 1
        else:
            break
    start = position
    while position < length and data[position:position + 1] not in PGM_WHITESPACE and data[position:position + 1] != b"#":
        position += 1
    if start == position:
        raise PgmHeaderError("PGM header is incomplete")
    return data[start:position], position


def _header_integer(token, field):
    if not token.isdigit():
        raise PgmHeaderError("PGM header field '" + field + "' is not a positive integer: " + repr(token))
    return int(token)


def read_pgm(data):
    """
    Decodes a binary PGM (P5) image with a maxval of at most 255.

    Comment lines are accepted anywhere in the header. The header ends with a single whitespace byte after maxval,
    then width * height bytes follow in row-major order.

    :param bytes data: Content of a .pgm file.
    :return: The decoded image, pixel values are kept exactly as stored.
    :rtype: GrayImage
    :raises PgmHeaderError: Wrong magic number, missing or invalid width, height or maxval.
    :raises PgmMaxvalError: maxval is greater than 255.
    :raises PgmTruncatedError: Fewer pixel bytes than announced by the header.
    """
    data = bytes(data)
    magic, position = _next_token(data, 0)
    if magic != PGM_MAGIC:
        raise PgmHeaderError("Not a binary PGM file, magic number is " + repr(magic) + " instead of b'P5'")
    token, position = _next_token(data, position)
    width = _header_integer(token, "width")
    token, position = _next_token(data, position)
    height = _header_integer(token, "height")
    token, position = _next_token(data, position)
    maxval = _header_integer(token, "maxval")
    if width < 1 or height < 1:
        raise PgmHeaderError("PGM dimensions must be at least 1x1, got " + str(width) + "x" + str(height))
    if maxval > 255:
        raise PgmMaxvalError("PGM maxval is " + str(maxval) + ", only 8-bit images (maxval <= 255) are supported")
    if maxval < 1:
        raise PgmHeaderError("PGM maxval must be at least 1, got " + str(maxval))
    if position >= len(data) or data[position:position + 1] not in PGM_WHITESPACE:
        raise PgmTruncatedError("PGM header is not followed by pixel data")
    position += 1

    expected = width * height
    body = data[position:position + expected]
    if len(body) < expected:
        raise PgmTruncatedError("PGM body holds " + str(len(body)) + " bytes, " + str(expected) + " were expected for a "
                                + str(width) + "x" + str(height) + " image")
    if len(data) > position + expected:
        logger.debug("ignoring %d trailing bytes after PGM pixel data", len(data) - position - expected)
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels)


def write_pgm(img):
    """
    Encodes an image in canonical binary PGM: "P5\\n<w> <h>\\n255\\n" followed by the raw bytes, no comments.

    :param GrayImage img: Image to encode.
    :rtype: bytes
    """
    header = "P5\n" + str(img.width) + " " + str(img.height) + "\n255\n"
    return header.encode("ascii") + img.pixels.tobytes()


# PNG format, through Pillow
def read_png(data):
    """Decodes an 8-bit grayscale PNG image, raises ValueError for any other mode."""
    with Image.open(io.BytesIO(bytes(data))) as picture:
        if picture.mode != "L":
            raise ValueError("Only 8-bit grayscale PNG images are supported, got mode '" + picture.mode + "'")
        return GrayImage(np.asarray(picture, dtype=np.uint8))


def write_png(img):
    """Encodes an image as an 8-bit grayscale PNG."""
    buffer = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(img.pixels), mode="L").save(buffer, format="PNG")
    return buffer.getvalue()


def write_png_rgb(pixels):
    """Encodes an array of shape (height, width, 3) as an 8-bit RGB PNG."""
    buffer = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8), mode="RGB").save(buffer, format="PNG")
    return buffer.getvalue()


def load_image(path):
    """Reads a .pgm or .png file, depending on its suffix."""
    suffix = os.path.splitext(str(path))[1].lower()
    with open(path, "rb") as file:
        data = file.read()
    if suffix == ".png":
        return read_png(data)
    elif suffix in (".pgm", ".pnm"):
        return read_pgm(data)
    raise ValueError("Image format of '" + str(path) + "' not recognized, needs to be .pgm or .png")


def save_image(path, img):
    """Writes an image as .pgm or .png, depending on the suffix of path."""
    suffix = os.path.splitext(str(path))[1].lower()
    if suffix == ".png":
        data = write_png(img)
    elif suffix in (".pgm", ".pnm"):
        data = write_pgm(img)
    else:
        raise ValueError("Image format of '" + str(path) + "' not recognized, needs to be .pgm or .png")
    with open(path, "wb") as file:
        file.write(data)


def quantize_to_gray(img):
    """
    Converts a FloatImage to 8 bits with a linear min-max scaling : round(255 * (v - min) / (max - min)).

    Rounding is half-up. If every value is the same, the output is all zeros.

    :param FloatImage img: Real-valued image, usually an entropy image.
    :rtype: GrayImage
    """
    values = img.pixels
    low = values.min()
    high = values.max()
    if high == low:
        return GrayImage(np.zeros(values.shape, dtype=np.uint8))
    scaled = round_half_up(255.0 * (values - low) / (high - low))
    return GrayImage(np.clip(scaled, 0, 255).astype(np.uint8))
