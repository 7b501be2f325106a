import setuptools

with open("README.md", "r", encoding="utf-8") as file:
    long_description = file.read()

with open("requirements.txt") as file:
    REQUIREMENTS = [line.strip() for line in file if line.strip()]

setuptools.setup(
    name="findability",
    version="1.0.0",
    description="Measure how findable each document of a collection is",
    long_description=long_description,
    long_description_content_type="text/markdown",
    install_requires=REQUIREMENTS,
    include_package_data=True,
    package_dir={"": "src"},
    packages=setuptools.find_packages(where="src"),
    package_data={"findability": ["data/stopwords.txt"]},
    entry_points={"console_scripts": ["findability=findability.manage:main"]},
    python_requires=">=3.9",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: POSIX :: Linux",
    ],
)
