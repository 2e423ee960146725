from setuptools import setup


install_requires = [
    'numpy',
    'pandas>=1.5',
    'pyyaml',
    'scipy',
]

setup(
    name='helistrip',
    version='0.1',
    description='Bound states of a particle on a twisted quantum strip',
    license='PostgreSQL',
    install_requires=install_requires,
    python_requires='>=3.6',
    packages=['helistrip'],
    entry_points={
        'console_scripts': ['helistrip = helistrip.script:main']
    }
    # See setup.cfg for other metadata and parameters.
)
