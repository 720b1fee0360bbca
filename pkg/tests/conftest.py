# coding=utf-8
#
import os
import shutil
import tempfile

import pytest


@pytest.fixture()
def output_dir(request):
    # scratch directory for report files, removed after the test
    path = tempfile.mkdtemp(prefix='adaptive-exposure-')
    if request.cls is not None:
        request.cls.output_dir = path

    def remove_output_dir():
        shutil.rmtree(path, ignore_errors=True)

    request.addfinalizer(remove_output_dir)
    return path


@pytest.fixture()
def no_output_env(request):
    # keep ADAPTIVE_EXPOSURE_* from the caller's shell out of the config defaults
    saved = {key: os.environ.pop(key) for key in ('ADAPTIVE_EXPOSURE_OUT', 'ADAPTIVE_EXPOSURE_WORKERS')
             if key in os.environ}

    def restore():
        for key in ('ADAPTIVE_EXPOSURE_OUT', 'ADAPTIVE_EXPOSURE_WORKERS'):
            os.environ.pop(key, None)
        os.environ.update(saved)

    request.addfinalizer(restore)
