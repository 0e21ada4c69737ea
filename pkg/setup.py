from setuptools import setup, find_packages

setup(
    name='glvortex',
    use_scm_version=True,
    setup_requires=['setuptools_scm'],
    description='Vortex profiles, connection coefficients and first eigenvalues '
                'of the linearized radial Ginzburg-Landau system.',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    license='MIT',
    classifiers=[
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
    ],
    packages=find_packages(exclude=('doc', 'tests')),
    include_package_data=True,
    package_data={
        '': ['*.ini']
    },
    python_requires='>=3.8',
    install_requires=['pandas>=1.5',
                      'numpy',
                      'scipy',
                      'seaborn',
                      'matplotlib'],
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': ['glv=glvortex.__main__:main'],
    }
)
