# Sample https://github.com/pypa/sampleproject

from setuptools import setup, find_packages

setup(
    name='adaptive-exposure-lib',
    version='0.1.0',
    url='https://github.com/drmobile/adaptive-exposure-lib',
    license='Apache Software License',
    author='Soocii',
    author_email='service@soocii.me',
    description='Triplet-frame adaptive exposure control, region fusion and rPPG heart-rate simulation.',
    packages=find_packages(exclude=['tests', 'samples']),
    long_description=open('README.md').read(),
    zip_safe=False,

    # See https://pypi.python.org/pypi?%3Aaction=list_classifiers
    classifiers=[
        'Development Status :: 4 - Beta',

        # Indicate who your project is intended for
        'Intended Audience :: Developers',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Image Processing',
        'Topic :: Scientific/Engineering :: Medical Science Apps.',

        # Pick your license as you wish (should match "license" above)
        'License :: OSI Approved :: Apache Software License',

        'Programming Language :: Python :: 3.7',
        'Programming Language :: Python :: 3.8',
    ],

    # List run-time dependencies here.  These will be installed by pip when
    # your project is installed. For an analysis of "install_requires" vs pip's
    # requirements files see:
    # https://packaging.python.org/en/latest/requirements.html
    install_requires=['six', 'numpy>=1.17', 'scipy>=1.4'],

    entry_points={
        'console_scripts': [
            'adaptive-exposure=adaptive_exposure_lib.cli:main',
        ],
    },

    # List additional groups of dependencies here (e.g. development
    # dependencies). Users will be able to install these using the "extras"
    # syntax, for example:
    #
    #   $ pip install adaptive-exposure-lib[dev]
    extras_require={  # Optional
        'dev': ['pytest', 'pycodestyle', 'pytest-cov', 'coveralls'],
    },
)
